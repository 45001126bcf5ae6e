#pragma once

#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "spinchain/dense.hpp"
#include "spinchain/pauli.hpp"

namespace testutil {

using spinchain::Complex;
using spinchain::PauliString;
using spinchain::PauliSum;

struct TermSpec {
  Complex coeff;
  std::string labels;
};

inline PauliSum make_sum(const std::vector<TermSpec>& terms) {
  PauliSum out(static_cast<int>(terms.at(0).labels.size()));
  for (const auto& t : terms) {
    out.add(PauliString::from_label(t.labels, t.coeff));
  }
  return out.pruned();
}

inline std::vector<oracle::Term> to_oracle(const PauliSum& sum) {
  std::vector<oracle::Term> out;
  for (const auto& [key, c] : sum.terms()) {
    out.push_back({c, sum.term(key, c).label_string()});
  }
  if (out.empty()) {
    out.push_back({Complex{0.0, 0.0},
                   std::string(static_cast<std::size_t>(sum.num_sites()), 'I')});
  }
  return out;
}

inline double max_abs_diff(const Eigen::MatrixXcd& a,
                           const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Library sum densified minus oracle reconstruction of the same sum.
inline double dense_mismatch(const PauliSum& sum) {
  return max_abs_diff(spinchain::to_dense(sum).mat,
                      oracle::sum_matrix(to_oracle(sum)));
}

}  // namespace testutil
