#pragma once

// Brute-force reference implementations used as independent oracles. They
// deliberately avoid the library's bit tricks: everything is built from
// explicit Kronecker products and index loops.

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline Matrix pauli_matrix(char label) {
  Matrix m(2, 2);
  switch (label) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y':
      m << Complex{0, 0}, Complex{0, -1}, Complex{0, 1}, Complex{0, 0};
      break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::runtime_error("bad pauli label");
  }
  return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Site 1 leftmost, as everywhere in the project.
inline Matrix string_matrix(const std::string& labels, Complex coeff = 1.0) {
  Matrix out = Matrix::Identity(1, 1);
  for (char c : labels) out = kron(out, pauli_matrix(c));
  return coeff * out;
}

struct Term {
  Complex coeff;
  std::string labels;
};

inline Matrix sum_matrix(const std::vector<Term>& terms) {
  if (terms.empty()) return Matrix::Zero(1, 1);
  const Eigen::Index dim = Eigen::Index{1}
                           << static_cast<Eigen::Index>(terms[0].labels.size());
  Matrix out = Matrix::Zero(dim, dim);
  for (const auto& t : terms) out += string_matrix(t.labels, t.coeff);
  return out;
}

inline Matrix dense_commutator(const Matrix& a, const Matrix& b) {
  return a * b - b * a;
}

/// Partial trace by explicit index assembly: kept sites keep their order,
/// site 1 owns the most significant bit.
inline Matrix partial_trace(const Matrix& m, int num_sites,
                            const std::vector<int>& traced_sites) {
  std::vector<int> kept;
  for (int s = 1; s <= num_sites; ++s) {
    bool is_traced = false;
    for (int t : traced_sites) is_traced |= (t == s);
    if (!is_traced) kept.push_back(s);
  }
  const int nk = static_cast<int>(kept.size());
  const int nt = static_cast<int>(traced_sites.size());
  const Eigen::Index dk = Eigen::Index{1} << nk;
  const Eigen::Index dt = Eigen::Index{1} << nt;

  auto full_index = [&](Eigen::Index kp, Eigen::Index tr) {
    Eigen::Index idx = 0;
    for (int i = 0; i < nk; ++i) {
      const Eigen::Index bit = (kp >> (nk - 1 - i)) & 1;
      idx |= bit << (num_sites - kept[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < nt; ++i) {
      const Eigen::Index bit = (tr >> (nt - 1 - i)) & 1;
      idx |= bit << (num_sites - traced_sites[static_cast<std::size_t>(i)]);
    }
    return idx;
  };

  Matrix out = Matrix::Zero(dk, dk);
  for (Eigen::Index a = 0; a < dk; ++a) {
    for (Eigen::Index b = 0; b < dk; ++b) {
      for (Eigen::Index e = 0; e < dt; ++e) {
        out(a, b) += m(full_index(a, e), full_index(b, e));
      }
    }
  }
  return out;
}

/// Closed-form single-qubit rotation exp(-i t P) = cos(t) I - i sin(t) P
/// for an involutory P (any Pauli).
inline Matrix single_qubit_rotation(char axis, double t) {
  return std::cos(t) * pauli_matrix('I') -
         Complex{0, 1} * std::sin(t) * pauli_matrix(axis);
}

}  // namespace oracle
