#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "spinchain/dense.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/pauli.hpp"
#include "spinchain/random.hpp"

namespace spinchain {

/// Trace-preserving completely positive map on one chain site, as a Kraus
/// set of 2x2 operators.
struct QuantumChannel {
  std::string label;
  std::vector<Eigen::Matrix2cd> kraus;
};

/// Throws unless sum K^dagger K = I within tol.
inline void validate_channel(const QuantumChannel& ch, double tol = 1e-10) {
  if (ch.kraus.empty()) {
    throw ValidationError("channel '" + ch.label + "' has no Kraus operators");
  }
  Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
  for (const auto& k : ch.kraus) acc += k.adjoint() * k;
  const double err = (acc - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
  if (err > tol) {
    throw ValidationError("channel '" + ch.label +
                          "' is not trace preserving: completeness defect " +
                          std::to_string(err));
  }
}

inline QuantumChannel identity_channel() {
  return {"identity", {Eigen::Matrix2cd::Identity()}};
}

inline QuantumChannel projective_z_channel() {
  Eigen::Matrix2cd k0 = Eigen::Matrix2cd::Zero();
  Eigen::Matrix2cd k1 = Eigen::Matrix2cd::Zero();
  k0(0, 0) = 1.0;
  k1(1, 1) = 1.0;
  return {"projective_z", {k0, k1}};
}

inline QuantumChannel projective_x_channel() {
  Eigen::Matrix2cd kp, km;
  kp << 0.5, 0.5, 0.5, 0.5;
  km << 0.5, -0.5, -0.5, 0.5;
  return {"projective_x", {kp, km}};
}

inline QuantumChannel depolarizing_channel() {
  Eigen::Matrix2cd x, y, z;
  x << 0, 1, 1, 0;
  y << Complex{0, 0}, Complex{0, -1}, Complex{0, 1}, Complex{0, 0};
  z << 1, 0, 0, -1;
  return {"depolarizing",
          {0.5 * Eigen::Matrix2cd::Identity(), 0.5 * x, 0.5 * y, 0.5 * z}};
}

inline QuantumChannel phase_flip_channel(double p) {
  if (p < 0.0 || p > 1.0) {
    throw UsageError("phase flip probability must lie in [0,1]");
  }
  Eigen::Matrix2cd z;
  z << 1, 0, 0, -1;
  return {"phase_flip(" + std::to_string(p) + ")",
          {std::sqrt(1.0 - p) * Eigen::Matrix2cd::Identity(),
           std::sqrt(p) * z}};
}

/// Random trace-preserving channel via Stinespring dilation: a Haar
/// unitary on qubit (x) ancilla with the ancilla prepared in |0>, read out
/// in the ancilla basis. Trace preservation holds by construction.
inline QuantumChannel random_channel(std::uint64_t seed, int ancilla_dim = 2) {
  if (ancilla_dim != 2 && ancilla_dim != 4) {
    throw UsageError("random channel ancilla dimension must be 2 or 4");
  }
  RngEngine rng(seed);
  const int dim = 2 * ancilla_dim;
  const Eigen::MatrixXcd u = haar_unitary(dim, rng);
  QuantumChannel ch{"random(seed=" + std::to_string(seed) +
                        ",ancilla=" + std::to_string(ancilla_dim) + ")",
                    {}};
  // Composite index (system, ancilla) = s * ancilla_dim + a.
  for (int a = 0; a < ancilla_dim; ++a) {
    Eigen::Matrix2cd k;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        k(i, j) = u(i * ancilla_dim + a, j * ancilla_dim + 0);
      }
    }
    ch.kraus.push_back(k);
  }
  return ch;
}

/// The bundled channel catalog. `random(seed, ancilla_dim)` completes it.
inline std::vector<QuantumChannel> standard_channels() {
  return {identity_channel(), projective_z_channel(), projective_x_channel(),
          depolarizing_channel(), phase_flip_channel(0.25)};
}

/// sum_i (I (x) K_i (x) I) rho (...)^dagger with K_i acting on `site`.
inline DenseOperator apply_channel(const QuantumChannel& ch,
                                   const DenseOperator& rho, int site) {
  validate_channel(ch);
  if (site < 1 || site > rho.num_sites) {
    throw UsageError("channel site " + std::to_string(site) +
                     " outside chain of length " +
                     std::to_string(rho.num_sites));
  }
  DenseOperator out = DenseOperator::zero(rho.num_sites);
  for (const auto& k : ch.kraus) {
    const DenseOperator ke =
        embed(DenseOperator(1, k), SiteSet::of({site}), rho.num_sites);
    out.mat += ke.mat * rho.mat * ke.mat.adjoint();
  }
  return out;
}

/// Pauli transfer matrix T(a,b) = (1/2) Tr(sigma_a M(sigma_b)) in the
/// (I,X,Y,Z) basis. Real for CP maps; the imaginary part is validated
/// away.
inline Eigen::Matrix4d transfer_matrix(const QuantumChannel& ch) {
  validate_channel(ch);
  std::array<Eigen::Matrix2cd, 4> sigma;
  sigma[0] = Eigen::Matrix2cd::Identity();
  sigma[1] << 0, 1, 1, 0;
  sigma[2] << Complex{0, 0}, Complex{0, -1}, Complex{0, 1}, Complex{0, 0};
  sigma[3] << 1, 0, 0, -1;
  Eigen::Matrix4d t = Eigen::Matrix4d::Zero();
  for (int b = 0; b < 4; ++b) {
    Eigen::Matrix2cd image = Eigen::Matrix2cd::Zero();
    for (const auto& k : ch.kraus) image += k * sigma[b] * k.adjoint();
    for (int a = 0; a < 4; ++a) {
      const Complex v = 0.5 * (sigma[a] * image).trace();
      if (std::abs(v.imag()) > 1e-12) {
        throw ValidationError("channel transfer matrix has imaginary entry " +
                              std::to_string(v.imag()));
      }
      t(a, b) = v.real();
    }
  }
  return t;
}

/// Applies the channel symbolically at `site` through its transfer
/// matrix: each term fans out into at most four terms.
inline PauliSum apply_channel(const QuantumChannel& ch, const PauliSum& op,
                              int site) {
  if (site < 1 || site > op.num_sites()) {
    throw UsageError("channel site " + std::to_string(site) +
                     " outside chain of length " +
                     std::to_string(op.num_sites()));
  }
  const Eigen::Matrix4d t = transfer_matrix(ch);
  const SiteComponents parts = decompose_at_site(op, site);
  PauliSum out(op.num_sites());
  const std::array<Pauli, 4> basis{Pauli::I, Pauli::X, Pauli::Y, Pauli::Z};
  for (int b = 0; b < 4; ++b) {
    const PauliSum& comp = parts[basis[static_cast<std::size_t>(b)]];
    if (comp.empty()) continue;
    for (int a = 0; a < 4; ++a) {
      const double w = t(a, b);
      if (w == 0.0) continue;
      out.add_scaled(
          insert_site(comp, site, basis[static_cast<std::size_t>(a)]),
          Complex{w, 0.0});
    }
  }
  return out.pruned();
}

}  // namespace spinchain
