#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "spinchain/dense.hpp"
#include "spinchain/pauli.hpp"

namespace spinchain {

using RngEngine = std::mt19937_64;

/// splitmix64 finalizer; used to derive per-cell seeds from a master seed
/// so sweep results are independent of execution order.
inline std::uint64_t mix_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(a ^ (0x9e3779b97f4a7c15ULL + mix_seed(b)));
}

template <typename... Rest>
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b,
                              std::uint64_t c, Rest... rest) {
  return mix_seed(mix_seed(a, b), c, rest...);
}

inline Eigen::MatrixXcd ginibre(int dim, RngEngine& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd g(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      g(r, c) = Complex{gauss(rng), gauss(rng)};
    }
  }
  return g;
}

/// Haar-distributed random unitary: QR of a Ginibre matrix with the R
/// diagonal phases folded back into Q.
inline Eigen::MatrixXcd haar_unitary(int dim, RngEngine& rng) {
  const Eigen::MatrixXcd g = ginibre(dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    const double a = std::abs(d);
    q.col(j) *= (a == 0.0) ? Complex{1.0, 0.0} : d / a;
  }
  return q;
}

/// Haar-random pure state as a projector.
inline DenseOperator haar_pure_state(int num_sites, RngEngine& rng) {
  const int dim = 1 << num_sites;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd psi(dim);
  for (int i = 0; i < dim; ++i) psi[i] = Complex{gauss(rng), gauss(rng)};
  psi.normalize();
  return DenseOperator(num_sites, psi * psi.adjoint());
}

/// Haar pure state mixed with I/d; mix_weight > 0 gives full rank.
inline DenseOperator random_state(int num_sites, RngEngine& rng,
                                  double mix_weight = 0.3) {
  DenseOperator pure = haar_pure_state(num_sites, rng);
  const double d = std::ldexp(1.0, num_sites);
  pure.mat = (1.0 - mix_weight) * pure.mat +
             (mix_weight / d) *
                 Eigen::MatrixXcd::Identity(pure.dim(), pure.dim());
  return pure;
}

/// Tensor product of independent Haar-random single-qubit pure states.
inline DenseOperator random_product_state(int num_sites, RngEngine& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Ones(1);
  for (int s = 0; s < num_sites; ++s) {
    Eigen::Vector2cd q{Complex{gauss(rng), gauss(rng)},
                       Complex{gauss(rng), gauss(rng)}};
    q.normalize();
    Eigen::VectorXcd next(psi.size() * 2);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      next[2 * i] = psi[i] * q[0];
      next[2 * i + 1] = psi[i] * q[1];
    }
    psi.swap(next);
  }
  return DenseOperator(num_sites, psi * psi.adjoint());
}

/// Uniform point in the closed unit disk (Bloch xy components).
inline std::pair<double, double> random_bloch_xy(RngEngine& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  while (true) {
    const double x = uni(rng);
    const double y = uni(rng);
    if (x * x + y * y <= 1.0) return {x, y};
  }
}

/// Random Pauli sum with `num_terms` distinct random strings. With
/// dyadic = true, coefficients are drawn from the grid k/256,
/// k in [-256, 256], so all downstream algebra is exact in doubles.
inline PauliSum random_pauli_sum(int num_sites, int num_terms, RngEngine& rng,
                                 bool dyadic = false, bool hermitian = true) {
  std::uniform_int_distribution<std::uint64_t> labels(
      0, (std::uint64_t{1} << (2 * num_sites)) - 1);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> grid(-256, 256);
  PauliSum out(num_sites);
  for (int i = 0; i < num_terms; ++i) {
    const std::uint64_t bits = labels(rng);
    PauliString s(num_sites);
    s.x_mask = bits & ((std::uint64_t{1} << num_sites) - 1);
    s.z_mask = bits >> num_sites;
    const double re = dyadic ? grid(rng) / 256.0 : uni(rng);
    const double im = hermitian ? 0.0 : (dyadic ? grid(rng) / 256.0 : uni(rng));
    s.coeff = Complex{re, im};
    out.add(s);
  }
  return out.pruned();
}

/// Random sum whose every term is non-identity somewhere on `block`, so
/// the partial trace over `block` is structurally empty.
inline PauliSum random_sum_traceless_on(int num_sites, const SiteSet& block,
                                        int num_terms, RngEngine& rng,
                                        bool dyadic = false) {
  std::uniform_int_distribution<std::uint64_t> labels(
      0, (std::uint64_t{1} << (2 * num_sites)) - 1);
  std::uniform_int_distribution<int> pick(0, block.size() - 1);
  std::uniform_int_distribution<int> which(1, 3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> grid(-256, 256);
  const std::vector<int> block_sites = block.sites();
  PauliSum out(num_sites);
  for (int i = 0; i < num_terms; ++i) {
    const std::uint64_t bits = labels(rng);
    PauliString s(num_sites);
    s.x_mask = bits & ((std::uint64_t{1} << num_sites) - 1);
    s.z_mask = bits >> num_sites;
    if (s.identity_on(block)) {
      const int site = block_sites[static_cast<std::size_t>(pick(rng))];
      s.set(site, static_cast<Pauli>(which(rng)));
    }
    const double re = dyadic ? grid(rng) / 256.0 : uni(rng);
    s.coeff = Complex{re, 0.0};
    out.add(s);
  }
  return out.pruned();
}

/// Random sum with support inside `block` only (identity elsewhere).
inline PauliSum random_sum_supported_on(int num_sites, const SiteSet& block,
                                        int num_terms, RngEngine& rng,
                                        bool dyadic = false) {
  std::uniform_int_distribution<int> which(0, 3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> grid(-256, 256);
  const std::vector<int> sites = block.sites();
  PauliSum out(num_sites);
  for (int i = 0; i < num_terms; ++i) {
    PauliString s(num_sites);
    for (int site : sites) s.set(site, static_cast<Pauli>(which(rng)));
    s.coeff = Complex{dyadic ? grid(rng) / 256.0 : uni(rng), 0.0};
    out.add(s);
  }
  return out.pruned();
}

}  // namespace spinchain
