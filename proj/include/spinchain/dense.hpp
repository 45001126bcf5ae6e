#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "spinchain/errors.hpp"
#include "spinchain/pauli.hpp"

namespace spinchain {

/// Default refusal point for dense work: 2^12 = 4096-dimensional matrices.
inline constexpr int kDefaultDenseCap = 12;

/// State-validation thresholds, chosen to separate genuine physics
/// violations from round-off.
struct StateTolerances {
  double hermiticity = 1e-12;
  double trace = 1e-12;
  double min_eigenvalue = -1e-10;
};

/// A 2^N x 2^N complex matrix tagged with its site count. Site 1 is the
/// most significant Kronecker factor throughout: basis index
/// b1*2^(N-1) + ... + bN.
struct DenseOperator {
  int num_sites = 0;
  Eigen::MatrixXcd mat;

  DenseOperator() = default;
  DenseOperator(int n, Eigen::MatrixXcd m) : num_sites(n), mat(std::move(m)) {
    const Eigen::Index want = Eigen::Index{1} << n;
    if (mat.rows() != want || mat.cols() != want) {
      throw UsageError("dense operator on " + std::to_string(n) +
                       " sites must be " + std::to_string(want) + "x" +
                       std::to_string(want));
    }
  }

  Eigen::Index dim() const { return mat.rows(); }

  static DenseOperator zero(int n) {
    const Eigen::Index d = Eigen::Index{1} << n;
    return DenseOperator(n, Eigen::MatrixXcd::Zero(d, d));
  }

  static DenseOperator identity(int n) {
    const Eigen::Index d = Eigen::Index{1} << n;
    return DenseOperator(n, Eigen::MatrixXcd::Identity(d, d));
  }
};

namespace detail {

inline void check_dense_cap(int n, int cap) {
  if (n < 0) throw UsageError("negative site count");
  if (n > cap) {
    throw ResourceError("dense request for " + std::to_string(n) +
                        " sites exceeds cap of " + std::to_string(cap) +
                        " (2^" + std::to_string(cap) + "-dim)");
  }
}

// Maps the internal site-major mask (site s at bit s-1) to index space,
// where site 1 owns the most significant bit.
inline std::uint64_t site_mask_to_index_mask(std::uint64_t m, int n) {
  std::uint64_t out = 0;
  for (int s = 1; s <= n; ++s) {
    if ((m >> (s - 1)) & 1) out |= std::uint64_t{1} << (n - s);
  }
  return out;
}

}  // namespace detail

inline bool is_hermitian(const Eigen::MatrixXcd& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline double max_abs(const Eigen::MatrixXcd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Densifies a canonical Pauli sum. Each string touches one entry per
/// column: sigma|b> = i^{x.z} (-1)^{z.b} |b ^ x>.
inline DenseOperator to_dense(const PauliSum& op,
                              int dense_cap = kDefaultDenseCap) {
  const int n = op.num_sites();
  detail::check_dense_cap(n, dense_cap);
  DenseOperator out = DenseOperator::zero(n);
  const std::uint64_t dim = std::uint64_t{1} << n;
  for (const auto& [key, c] : op.terms()) {
    const std::uint64_t xi = detail::site_mask_to_index_mask(key.first, n);
    const std::uint64_t zi = detail::site_mask_to_index_mask(key.second, n);
    const int head = std::popcount(key.first & key.second);
    const Complex base = detail::times_i_pow(c, head);
    for (std::uint64_t col = 0; col < dim; ++col) {
      const std::uint64_t row = col ^ xi;
      const double sign = (std::popcount(zi & col) & 1) ? -1.0 : 1.0;
      out.mat(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
          sign * base;
    }
  }
  return out;
}

/// Projects a dense operator onto the Pauli string basis:
/// coeff(P) = Tr(P rho) / 2^N. Exact structural zeros become sub-epsilon
/// coefficients and are pruned. O(8^N); intended for desk-scale N.
inline PauliSum pauli_expand(const DenseOperator& op, bool prune = true) {
  const int n = op.num_sites;
  const std::uint64_t dim = std::uint64_t{1} << n;
  const double inv = 1.0 / std::ldexp(1.0, n);
  PauliSum out(n);
  const std::uint64_t strings = std::uint64_t{1} << (2 * n);
  for (std::uint64_t sk = 0; sk < strings; ++sk) {
    const std::uint64_t x = sk & (dim - 1);
    const std::uint64_t z = sk >> n;
    const std::uint64_t xi = detail::site_mask_to_index_mask(x, n);
    const std::uint64_t zi = detail::site_mask_to_index_mask(z, n);
    const int head = std::popcount(x & z);
    // Tr(P rho) = sum_b i^head (-1)^{z.b} rho(b, b^x).
    Complex tr{0.0, 0.0};
    for (std::uint64_t col = 0; col < dim; ++col) {
      const std::uint64_t m = col ^ xi;
      const double sign = (std::popcount(zi & col) & 1) ? -1.0 : 1.0;
      tr += sign * op.mat(static_cast<Eigen::Index>(col),
                          static_cast<Eigen::Index>(m));
    }
    const Complex c = detail::times_i_pow(tr, head) * inv;
    if (c != Complex{0.0, 0.0}) {
      PauliString s(n, c);
      s.x_mask = x;
      s.z_mask = z;
      out.add(s);
    }
  }
  return prune ? out.pruned() : out;
}

/// Kronecker embedding of a k-site operator at the given positions,
/// identity on all other sites, under the global ordering convention.
inline DenseOperator embed(const DenseOperator& op, const SiteSet& positions,
                           int num_sites, int dense_cap = kDefaultDenseCap) {
  detail::check_dense_cap(num_sites, dense_cap);
  const std::vector<int> pos = positions.sites();
  const int k = static_cast<int>(pos.size());
  if (k != op.num_sites) {
    throw UsageError("embedding " + std::to_string(op.num_sites) +
                     "-site operator at " + std::to_string(k) + " positions");
  }
  for (int s : pos) {
    if (s < 1 || s > num_sites) {
      throw UsageError("embedding position " + std::to_string(s) +
                       " outside chain of length " + std::to_string(num_sites));
    }
  }

  // Index-space bit of site s is (num_sites - s); sub-operator bit of the
  // i-th listed site (ascending) is (k - 1 - i).
  std::vector<int> target_bit(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    target_bit[static_cast<std::size_t>(i)] = num_sites - pos[static_cast<std::size_t>(i)];
  }
  std::uint64_t rest_mask = (std::uint64_t{1} << num_sites) - 1;
  for (int b : target_bit) rest_mask &= ~(std::uint64_t{1} << b);

  const std::uint64_t sub_dim = std::uint64_t{1} << k;
  DenseOperator out = DenseOperator::zero(num_sites);

  // Enumerate the identity-padded coordinates directly.
  std::uint64_t rest = 0;
  while (true) {
    for (std::uint64_t r = 0; r < sub_dim; ++r) {
      std::uint64_t row = rest;
      for (int i = 0; i < k; ++i) {
        if ((r >> (k - 1 - i)) & 1) {
          row |= std::uint64_t{1} << target_bit[static_cast<std::size_t>(i)];
        }
      }
      for (std::uint64_t c = 0; c < sub_dim; ++c) {
        const Complex v = op.mat(static_cast<Eigen::Index>(r),
                                 static_cast<Eigen::Index>(c));
        if (v == Complex{0.0, 0.0}) continue;
        std::uint64_t col = rest;
        for (int i = 0; i < k; ++i) {
          if ((c >> (k - 1 - i)) & 1) {
            col |= std::uint64_t{1} << target_bit[static_cast<std::size_t>(i)];
          }
        }
        out.mat(static_cast<Eigen::Index>(row),
                static_cast<Eigen::Index>(col)) = v;
      }
    }
    if (rest == rest_mask) break;
    rest = (rest - rest_mask) & rest_mask;  // next subset of rest_mask
  }
  return out;
}

/// Partial trace over `traced`; remaining sites keep their order.
inline DenseOperator partial_trace(const DenseOperator& rho,
                                   const SiteSet& traced) {
  const int n = rho.num_sites;
  if (!traced.subset_of(SiteSet::range(1, n))) {
    throw UsageError("traced sites outside chain of length " +
                     std::to_string(n));
  }
  const std::vector<int> kept_sites = traced.complement(n).sites();
  const std::vector<int> traced_sites = traced.sites();
  const int nk = static_cast<int>(kept_sites.size());
  const int nt = static_cast<int>(traced_sites.size());

  std::vector<int> kept_bit(static_cast<std::size_t>(nk));
  for (int i = 0; i < nk; ++i) {
    kept_bit[static_cast<std::size_t>(i)] = n - kept_sites[static_cast<std::size_t>(i)];
  }
  std::vector<int> traced_bit(static_cast<std::size_t>(nt));
  for (int i = 0; i < nt; ++i) {
    traced_bit[static_cast<std::size_t>(i)] = n - traced_sites[static_cast<std::size_t>(i)];
  }

  const std::uint64_t kd = std::uint64_t{1} << nk;
  const std::uint64_t td = std::uint64_t{1} << nt;
  DenseOperator out = DenseOperator::zero(nk);

  auto compose = [&](std::uint64_t kept_idx, std::uint64_t traced_idx) {
    std::uint64_t idx = 0;
    for (int i = 0; i < nk; ++i) {
      if ((kept_idx >> (nk - 1 - i)) & 1) {
        idx |= std::uint64_t{1} << kept_bit[static_cast<std::size_t>(i)];
      }
    }
    for (int i = 0; i < nt; ++i) {
      if ((traced_idx >> (nt - 1 - i)) & 1) {
        idx |= std::uint64_t{1} << traced_bit[static_cast<std::size_t>(i)];
      }
    }
    return idx;
  };

  for (std::uint64_t a = 0; a < kd; ++a) {
    for (std::uint64_t b = 0; b < kd; ++b) {
      Complex acc{0.0, 0.0};
      for (std::uint64_t e = 0; e < td; ++e) {
        acc += rho.mat(static_cast<Eigen::Index>(compose(a, e)),
                       static_cast<Eigen::Index>(compose(b, e)));
      }
      out.mat(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
    }
  }
  return out;
}

/// Eigenpairs of a Hermitian operator.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;  // columns

  Eigen::MatrixXcd reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
  }
};

inline SpectralDecomposition diagonalize_hermitian(const Eigen::MatrixXcd& h,
                                                   double tol = 1e-10) {
  if (h.rows() != h.cols()) throw UsageError("diagonalize: non-square matrix");
  if (!is_hermitian(h, tol)) {
    throw ValidationError("matrix is not Hermitian within " +
                          std::to_string(tol));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) {
    throw ValidationError("eigendecomposition failed to converge");
  }
  return SpectralDecomposition{es.eigenvalues(), es.eigenvectors()};
}

/// Validates density-operator invariants; throws ValidationError with the
/// failed check named.
inline void validate_state(const DenseOperator& rho,
                           const StateTolerances& tol = {}) {
  if (!is_hermitian(rho.mat, tol.hermiticity)) {
    throw ValidationError("state is not Hermitian within " +
                          std::to_string(tol.hermiticity));
  }
  const double tr_err = std::abs(rho.mat.trace() - Complex{1.0, 0.0});
  if (tr_err > tol.trace) {
    throw ValidationError("state trace deviates from 1 by " +
                          std::to_string(tr_err));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.mat,
                                                     Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < tol.min_eigenvalue) {
    throw ValidationError("state has negative eigenvalue " +
                          std::to_string(es.eigenvalues().minCoeff()));
  }
}

inline bool is_valid_state(const DenseOperator& rho,
                           const StateTolerances& tol = {}) {
  try {
    validate_state(rho, tol);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

/// Unitary evolution engine for a fixed Hermitian generator. One
/// eigendecomposition; every time point is O(dim^2) phases plus two
/// matrix products.
class Propagator {
 public:
  explicit Propagator(const DenseOperator& h, double hermiticity_tol = 1e-10)
      : num_sites_(h.num_sites),
        spectral_(diagonalize_hermitian(h.mat, hermiticity_tol)) {}

  const SpectralDecomposition& spectral() const { return spectral_; }

  /// U(t) = V exp(-i e t) V^dagger.
  Eigen::MatrixXcd unitary(double t) const {
    const Eigen::VectorXcd phases = phase_vector(t);
    return spectral_.eigenvectors * phases.asDiagonal() *
           spectral_.eigenvectors.adjoint();
  }

  /// U(t) A U(t)^dagger for an arbitrary operator A.
  DenseOperator evolve(const DenseOperator& a, double t) const {
    check(a);
    return DenseOperator(num_sites_,
                         conjugate_in_eigenbasis(to_eigenbasis(a), t));
  }

  /// Evolves one operator over a whole grid reusing the eigenbasis
  /// transform of A.
  std::vector<DenseOperator> evolve_grid(const DenseOperator& a,
                                         const std::vector<double>& ts) const {
    check(a);
    const Eigen::MatrixXcd w = to_eigenbasis(a);
    std::vector<DenseOperator> out;
    out.reserve(ts.size());
    for (double t : ts) {
      out.emplace_back(num_sites_, conjugate_in_eigenbasis(w, t));
    }
    return out;
  }

 private:
  void check(const DenseOperator& a) const {
    if (a.num_sites != num_sites_) {
      throw UsageError("operator site count does not match propagator");
    }
  }

  Eigen::VectorXcd phase_vector(double t) const {
    const Eigen::Index d = spectral_.eigenvalues.size();
    Eigen::VectorXcd phases(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      phases[j] = std::exp(Complex{0.0, -spectral_.eigenvalues[j] * t});
    }
    return phases;
  }

  Eigen::MatrixXcd to_eigenbasis(const DenseOperator& a) const {
    return spectral_.eigenvectors.adjoint() * a.mat * spectral_.eigenvectors;
  }

  Eigen::MatrixXcd conjugate_in_eigenbasis(const Eigen::MatrixXcd& w,
                                           double t) const {
    const Eigen::VectorXcd phases = phase_vector(t);
    const Eigen::MatrixXcd rotated =
        phases.asDiagonal() * w * phases.conjugate().asDiagonal();
    return spectral_.eigenvectors * rotated * spectral_.eigenvectors.adjoint();
  }

  int num_sites_;
  SpectralDecomposition spectral_;
};

/// exp(-iHt) rho exp(+iHt) via spectral decomposition of H.
inline DenseOperator evolve(const DenseOperator& h, const DenseOperator& rho,
                            double t) {
  return Propagator(h).evolve(rho, t);
}

/// Sum of absolute eigenvalues of a Hermitian operator.
inline double trace_norm(const DenseOperator& a, double hermiticity_tol = 1e-9) {
  if (!is_hermitian(a.mat, hermiticity_tol)) {
    throw ValidationError("trace norm input is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.mat,
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

/// (1/2) sum |eig(a - b)|: symmetric, nonnegative, zero iff a = b.
inline double trace_distance(const DenseOperator& a, const DenseOperator& b) {
  if (a.num_sites != b.num_sites || a.dim() != b.dim()) {
    throw UsageError("trace distance of operators with mismatched dimensions");
  }
  return 0.5 * trace_norm(DenseOperator(a.num_sites, a.mat - b.mat));
}

}  // namespace spinchain
