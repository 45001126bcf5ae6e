#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "spinchain/channel.hpp"
#include "spinchain/dense.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/pauli.hpp"

namespace spinchain {

/// Nearest-neighbour chain: H = sum_j J_j Z_j Z_{j+1} + sum_j b_j X_j,
/// with the cut n splitting sites into the system block {1..n-1} and the
/// environment {n..N}.
struct ChainConfig {
  int num_sites = 3;                 // N
  int cut = 2;                       // n
  std::vector<double> couplings;     // J_j, one per bond; empty = all 1
  std::vector<double> fields;        // b_j, one per site; empty = all 0
  std::vector<double> time_grid;

  void validate() const {
    if (num_sites < 2 || num_sites > kMaxSites) {
      throw ValidationError("chain length N = " + std::to_string(num_sites) +
                            " outside supported range [2, " +
                            std::to_string(kMaxSites) + "]");
    }
    if (cut < 2 || cut > num_sites) {
      throw ValidationError("cut n = " + std::to_string(cut) +
                            " must satisfy 2 <= n <= N");
    }
    if (!couplings.empty() &&
        couplings.size() != static_cast<std::size_t>(num_sites - 1)) {
      throw ValidationError("couplings must have N-1 entries");
    }
    if (!fields.empty() &&
        fields.size() != static_cast<std::size_t>(num_sites)) {
      throw ValidationError("fields must have N entries");
    }
    double prev = -1.0;
    for (double t : time_grid) {
      if (t < 0.0 || t < prev) {
        throw ValidationError("time grid must be ordered and nonnegative");
      }
      prev = t;
    }
  }

  double coupling(int bond) const {  // bond j couples sites j, j+1
    if (bond < 1 || bond >= num_sites) throw UsageError("bond out of range");
    return couplings.empty() ? 1.0
                             : couplings[static_cast<std::size_t>(bond - 1)];
  }

  double field(int site) const {
    if (site < 1 || site > num_sites) throw UsageError("site out of range");
    return fields.empty() ? 0.0 : fields[static_cast<std::size_t>(site - 1)];
  }

  bool fields_all_zero() const {
    for (double b : fields) {
      if (b != 0.0) return false;
    }
    return true;
  }

  SiteSet system_sites() const { return SiteSet::range(1, cut - 1); }
  SiteSet environment_sites() const { return SiteSet::range(cut, num_sites); }
  SiteSet far_environment_sites() const {  // environment minus the cut spin
    return SiteSet::range(cut + 1, num_sites);
  }
};

inline std::vector<double> linear_grid(double start, double stop, int steps) {
  if (steps < 1) throw UsageError("time grid needs at least one point");
  if (stop < start) throw UsageError("time grid stop before start");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  if (steps == 1) {
    out.push_back(start);
    return out;
  }
  const double dt = (stop - start) / (steps - 1);
  for (int i = 0; i < steps; ++i) out.push_back(start + dt * i);
  return out;
}

inline PauliSum build_hamiltonian(const ChainConfig& cfg) {
  cfg.validate();
  PauliSum h(cfg.num_sites);
  for (int j = 1; j < cfg.num_sites; ++j) {
    const double jj = cfg.coupling(j);
    if (jj == 0.0) continue;
    PauliString bond(cfg.num_sites, Complex{jj, 0.0});
    bond.set(j, Pauli::Z);
    bond.set(j + 1, Pauli::Z);
    h.add(bond);
  }
  for (int j = 1; j <= cfg.num_sites; ++j) {
    const double bj = cfg.field(j);
    if (bj == 0.0) continue;
    h.add(PauliString::single(cfg.num_sites, j, Pauli::X, Complex{bj, 0.0}));
  }
  return h.pruned();
}

inline DenseOperator dense_hamiltonian(const ChainConfig& cfg,
                                       int dense_cap = kDefaultDenseCap) {
  return to_dense(build_hamiltonian(cfg), dense_cap);
}

/// System / environment / interaction split by term support. The parts
/// stay on the full chain (identity padding) and re-sum to H exactly.
struct HamiltonianSplit {
  PauliSum system;       // support inside {1..n-1}
  PauliSum environment;  // support inside {n..N}
  PauliSum interaction;  // straddling terms
};

inline HamiltonianSplit split_hamiltonian(const PauliSum& h, int cut) {
  const int n = h.num_sites();
  if (cut < 2 || cut > n) throw UsageError("cut out of range");
  const SiteSet sys = SiteSet::range(1, cut - 1);
  const SiteSet env = SiteSet::range(cut, n);
  HamiltonianSplit out{PauliSum(n), PauliSum(n), PauliSum(n)};
  for (const auto& [key, c] : h.terms()) {
    const std::uint64_t support = key.first | key.second;
    if ((support & ~sys.mask()) == 0) {
      out.system.add(h.term(key, c));
    } else if ((support & ~env.mask()) == 0) {
      out.environment.add(h.term(key, c));
    } else {
      out.interaction.add(h.term(key, c));
    }
  }
  return out;
}

/// The three-way split around the cut spin:
/// H = (left bond) + (right bond) + I_n (x) rest, where the two bonds are
/// the only terms touching site n. Throws StructureError for any
/// Hamiltonian outside that family (it falls outside the theorem's scope).
struct CutSpinSplit {
  PauliSum left_bond;   // J_{n-1} Z_{n-1} Z_n, full-chain labels
  PauliSum right_bond;  // J_n Z_n Z_{n+1}, full-chain labels
  PauliSum rest;        // every term with identity at site n
};

inline CutSpinSplit split_at_cut_spin(const PauliSum& h, int cut) {
  const int n = h.num_sites();
  if (cut < 2 || cut > n - 1) {
    throw UsageError("cut spin split needs 2 <= n <= N-1");
  }
  CutSpinSplit out{PauliSum(n), PauliSum(n), PauliSum(n)};
  PauliString left(n), right(n);
  left.set(cut - 1, Pauli::Z);
  left.set(cut, Pauli::Z);
  right.set(cut, Pauli::Z);
  right.set(cut + 1, Pauli::Z);
  for (const auto& [key, c] : h.terms()) {
    const PauliString term = h.term(key, c);
    if (term.label_at(cut) == Pauli::I) {
      out.rest.add(term);
    } else if (key.first == left.x_mask && key.second == left.z_mask) {
      out.left_bond.add(term);
    } else if (key.first == right.x_mask && key.second == right.z_mask) {
      out.right_bond.add(term);
    } else {
      throw StructureError(
          "Hamiltonian has a term acting on the cut spin other than its two "
          "ZZ bonds: " +
          term.label_string());
    }
  }
  return out;
}

/// Initial state family: an arbitrary state on the system plus far
/// environment, tensored with a cut-spin state with Bloch vector
/// (r_x, r_y, r_z). The theorem requires r_z = 0 (equatorial plane);
/// r_z != 0 is admitted for counterexample runs.
struct InitialStateSpec {
  DenseOperator rest_state;  // on the N-1 sites other than the cut
  double r_x = 0.0;
  double r_y = 0.0;
  double r_z = 0.0;

  void validate(const ChainConfig& cfg) const {
    if (rest_state.num_sites != cfg.num_sites - 1) {
      throw ValidationError(
          "initial block state must live on N-1 sites, got " +
          std::to_string(rest_state.num_sites));
    }
    validate_state(rest_state);
    if (r_x * r_x + r_y * r_y + r_z * r_z > 1.0 + 1e-12) {
      throw ValidationError("Bloch vector lies outside the unit ball");
    }
  }

  bool conforming() const { return r_z == 0.0; }
};

inline Eigen::Matrix2cd bloch_state(double rx, double ry, double rz = 0.0) {
  Eigen::Matrix2cd rho;
  rho << Complex{(1.0 + rz) / 2.0, 0.0}, Complex{rx / 2.0, -ry / 2.0},
      Complex{rx / 2.0, ry / 2.0}, Complex{(1.0 - rz) / 2.0, 0.0};
  return rho;
}

/// Full-chain initial state with the cut-spin factor interleaved at
/// position n (the block state occupies the non-contiguous remaining
/// sites).
inline DenseOperator build_initial_state(const InitialStateSpec& spec,
                                         const ChainConfig& cfg,
                                         int dense_cap = kDefaultDenseCap) {
  cfg.validate();
  spec.validate(cfg);
  const int n = cfg.num_sites;
  SiteSet rest_sites;
  for (int s = 1; s <= n; ++s) {
    if (s != cfg.cut) rest_sites.insert(s);
  }
  const DenseOperator block = embed(spec.rest_state, rest_sites, n, dense_cap);
  const DenseOperator cut_factor =
      embed(DenseOperator(1, bloch_state(spec.r_x, spec.r_y, spec.r_z)),
            SiteSet::of({cfg.cut}), n, dense_cap);
  DenseOperator rho(n, block.mat * cut_factor.mat);
  validate_state(rho);
  return rho;
}

}  // namespace spinchain
