#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "spinchain/dense.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/pauli.hpp"

namespace spinchain {

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Writes one term per line as `<re> <im> <label>`, site 1 leftmost,
/// canonical (key-sorted) order. Blank lines and `#` comments are
/// accepted on input.
inline void write_pauli_sum(std::ostream& os, const PauliSum& op) {
  for (const auto& [key, c] : op.terms()) {
    const PauliString s = op.term(key, c);
    os << format_double(c.real()) << ' ' << format_double(c.imag()) << ' '
       << s.label_string() << '\n';
  }
}

inline std::string pauli_sum_to_string(const PauliSum& op) {
  std::ostringstream os;
  write_pauli_sum(os, op);
  return os.str();
}

/// Parses the line format. `num_sites` < 0 infers the size from the first
/// term; otherwise every label must have exactly that many sites.
inline PauliSum read_pauli_sum(std::istream& is, int num_sites = -1) {
  PauliSum out = num_sites >= 0 ? PauliSum(num_sites) : PauliSum(0);
  bool sized = num_sites >= 0;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double re = 0.0, im = 0.0;
    std::string label;
    if (!(ls >> re >> im >> label)) {
      throw UsageError("operator line " + std::to_string(lineno) +
                       " is not `<re> <im> <label>`: " + line);
    }
    std::string trailing;
    if (ls >> trailing) {
      throw UsageError("operator line " + std::to_string(lineno) +
                       " has trailing content: " + trailing);
    }
    if (!sized) {
      out = PauliSum(static_cast<int>(label.size()));
      sized = true;
    }
    if (static_cast<int>(label.size()) != out.num_sites()) {
      throw UsageError("operator line " + std::to_string(lineno) + " label '" +
                       label + "' does not match chain size " +
                       std::to_string(out.num_sites()));
    }
    out.add(PauliString::from_label(label, Complex{re, im}));
  }
  return out;
}

inline PauliSum pauli_sum_from_string(const std::string& text,
                                      int num_sites = -1) {
  std::istringstream is(text);
  return read_pauli_sum(is, num_sites);
}

/// Dense export through the Pauli basis; round-trips with
/// pauli_sum_from_string + to_dense.
inline std::string dense_to_pauli_lines(const DenseOperator& op) {
  return pauli_sum_to_string(pauli_expand(op));
}

/// Row-major CSV dump, real and imaginary parts interleaved per entry:
/// re(0,0),im(0,0),re(0,1),... One matrix row per line.
inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXcd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) os << ',';
      os << format_double(m(r, c).real()) << ','
         << format_double(m(r, c).imag());
    }
    os << '\n';
  }
}

inline Eigen::MatrixXcd read_matrix_csv(std::istream& is) {
  std::vector<std::vector<Complex>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<Complex> row;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) {
      vals.push_back(std::stod(cell));
    }
    if (vals.size() % 2 != 0) {
      throw UsageError("matrix CSV row has an odd number of fields");
    }
    for (std::size_t i = 0; i < vals.size(); i += 2) {
      row.emplace_back(vals[i], vals[i + 1]);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXcd(0, 0);
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXcd m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) !=
        nc) {
      throw UsageError("matrix CSV rows have inconsistent lengths");
    }
    for (Eigen::Index c = 0; c < nc; ++c) {
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

}  // namespace spinchain
