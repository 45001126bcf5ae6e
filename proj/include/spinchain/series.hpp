#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spinchain/dense.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/model.hpp"
#include "spinchain/pauli.hpp"

namespace spinchain {

/// Default order count for series checks; generous against the light-cone
/// spread of a short chain.
inline constexpr int kDefaultSeriesDepth = 12;

/// Term-count cap for series computation.
inline constexpr std::size_t kDefaultTermCap = 1'000'000;

/// [A_0 .. A_K] with A_0 = R and A_{k+1} = [A_k, H], each canonical.
inline std::vector<PauliSum> nested_commutators(
    const PauliSum& r, const PauliSum& h, int depth,
    std::size_t term_cap = kDefaultTermCap) {
  if (r.num_sites() != h.num_sites()) {
    throw UsageError("series operands live on different chain sizes");
  }
  if (depth < 0) throw UsageError("series depth must be nonnegative");
  std::vector<PauliSum> out;
  out.reserve(static_cast<std::size_t>(depth) + 1);
  out.push_back(r.pruned());
  for (int k = 1; k <= depth; ++k) {
    PauliSum next = commutator(out.back(), h);
    if (next.size() > term_cap) {
      throw ResourceError("series term count " + std::to_string(next.size()) +
                              " exceeds cap " + std::to_string(term_cap) +
                              " at order " + std::to_string(k),
                          k - 1);
    }
    out.push_back(std::move(next));
  }
  return out;
}

/// Per-order verdicts. Tracelessness is structural: an order passes only
/// when the traced sum has no surviving terms after canonical pruning.
/// max_residual_coeff records the largest merged coefficient the prune
/// removed, 0 when the sector is empty outright.
struct OrderRecord {
  int order = 0;
  std::size_t term_count = 0;
  bool env_trace_zero = false;  // Tr_E(A_k) structurally empty
  bool c0_traceless = false;    // Tr_~E of the I_n component
  bool c3_traceless = false;    // Tr_~E of the Z_n component
  double max_residual_coeff = 0.0;
};

struct SeriesReport {
  int cut = 0;  // n, the least environment site
  std::vector<OrderRecord> orders;

  bool all_env_trace_zero() const {
    for (const auto& o : orders) {
      if (!o.env_trace_zero) return false;
    }
    return true;
  }

  bool all_flags_hold() const {
    for (const auto& o : orders) {
      if (!(o.env_trace_zero && o.c0_traceless && o.c3_traceless)) {
        return false;
      }
    }
    return true;
  }

  /// First order whose environment trace fails to vanish, or -1.
  int first_env_trace_failure() const {
    for (const auto& o : orders) {
      if (!o.env_trace_zero) return o.order;
    }
    return -1;
  }

  /// The recursion property as observed: whenever both component flags
  /// hold at order k they hold at k+1.
  bool induction_consistent() const {
    for (std::size_t i = 0; i + 1 < orders.size(); ++i) {
      const bool at_k = orders[i].c0_traceless && orders[i].c3_traceless;
      const bool at_k1 =
          orders[i + 1].c0_traceless && orders[i + 1].c3_traceless;
      if (at_k && !at_k1) return false;
    }
    return true;
  }
};

namespace detail {

struct SectorCheck {
  bool empty;
  double residual;
};

inline SectorCheck traced_sector(const PauliSum& op, const SiteSet& block) {
  const PauliSum traced = partial_trace(op, block, /*prune=*/false);
  return {traced.pruned().empty(), traced.max_abs_coeff()};
}

}  // namespace detail

/// Evaluates Tr_E(A_k) and the two cut-spin component traces for every
/// order of a precomputed series. The cut is the least site of `env`.
inline SeriesReport check_traceless_series(const std::vector<PauliSum>& series,
                                           const SiteSet& env) {
  if (series.empty()) throw UsageError("empty series");
  const int n = series.front().num_sites();
  if (env.empty() || !env.subset_of(SiteSet::range(1, n))) {
    throw UsageError("environment block invalid for chain of length " +
                     std::to_string(n));
  }
  const int cut = env.min_site();
  // Sites above the cut, relabelled after the cut spin is removed.
  SiteSet far_env_reduced;
  for (int s : env.sites()) {
    if (s != cut) far_env_reduced.insert(s - 1);
  }

  SeriesReport report;
  report.cut = cut;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const PauliSum& a = series[k];
    OrderRecord rec;
    rec.order = static_cast<int>(k);
    rec.term_count = a.size();
    const auto envck = detail::traced_sector(a, env);
    rec.env_trace_zero = envck.empty;
    const SiteComponents parts = decompose_at_site(a, cut);
    const auto c0 = detail::traced_sector(parts.id, far_env_reduced);
    const auto c3 = detail::traced_sector(parts.z, far_env_reduced);
    rec.c0_traceless = c0.empty;
    rec.c3_traceless = c3.empty;
    rec.max_residual_coeff =
        std::max({envck.residual, c0.residual, c3.residual});
    report.orders.push_back(rec);
  }
  return report;
}

/// Dual-route check of the one-step recursion for the Z_n component.
/// Route one decomposes [A, H] directly; route two evaluates
/// [C0, left] + [C0, right] + [C3, rest] in the reduced space. The routes
/// agree coefficient for coefficient whenever H admits the cut-spin
/// split.
struct RecursionVerdict {
  bool routes_equal = false;     // exact coefficient-level equality
  double max_route_delta = 0.0;  // largest coefficient difference
  bool inputs_traceless = false;  // C0, C3 traceless over the far block
  bool d0_traceless = false;
  bool d3_traceless = false;
};

inline RecursionVerdict check_sector_recursion(const PauliSum& a,
                                               const PauliSum& h, int cut) {
  if (a.num_sites() != h.num_sites()) {
    throw UsageError("operator and Hamiltonian on different chain sizes");
  }
  const int n = a.num_sites();
  const CutSpinSplit split = split_at_cut_spin(h, cut);  // may throw

  // Strip the cut spin: bonds become single-Z factors, the rest drops I_n.
  const PauliSum left = decompose_at_site(split.left_bond, cut).z;
  const PauliSum right = decompose_at_site(split.right_bond, cut).z;
  const PauliSum rest = decompose_at_site(split.rest, cut).id;

  const SiteComponents parts = decompose_at_site(a, cut);
  PauliSum formula = commutator(parts.id, left);
  formula.add_scaled(commutator(parts.id, right), Complex{1.0, 0.0});
  formula.add_scaled(commutator(parts.z, rest), Complex{1.0, 0.0});
  formula = formula.pruned();

  const SiteComponents next = decompose_at_site(commutator(a, h), cut);
  const PauliSum& direct = next.z;

  RecursionVerdict verdict;
  verdict.routes_equal = (direct == formula);
  for (const auto& [key, c] : direct.terms()) {
    verdict.max_route_delta =
        std::max(verdict.max_route_delta, std::abs(c - formula.coeff(direct.term(key, c))));
  }
  for (const auto& [key, c] : formula.terms()) {
    verdict.max_route_delta =
        std::max(verdict.max_route_delta, std::abs(c - direct.coeff(formula.term(key, c))));
  }

  SiteSet far_env_reduced = SiteSet::range(cut, n - 1);
  verdict.inputs_traceless =
      partial_trace(parts.id, far_env_reduced).empty() &&
      partial_trace(parts.z, far_env_reduced).empty();
  verdict.d0_traceless = partial_trace(next.id, far_env_reduced).empty();
  verdict.d3_traceless = partial_trace(next.z, far_env_reduced).empty();
  return verdict;
}

/// The three partial-trace identities obeyed by any operator with
/// vanishing environment trace, multiplied by block-local Hermitian
/// operators. All three hold structurally for valid inputs; a failure
/// signals an implementation defect.
struct TraceIdentityVerdict {
  bool left_product = false;    // Tr_E(A (H_S (x) I_E)) = 0
  bool right_product = false;   // Tr_E((H_S (x) I_E) A) = 0
  bool env_commutator = false;  // Tr_E([A, I_S (x) H_E]) = 0

  bool all() const { return left_product && right_product && env_commutator; }
};

inline TraceIdentityVerdict verify_trace_identities(const PauliSum& a,
                                                    const PauliSum& h_sys,
                                                    const PauliSum& h_env,
                                                    const SiteSet& env) {
  const int n = a.num_sites();
  if (h_sys.num_sites() != n || h_env.num_sites() != n) {
    throw UsageError("operands live on different chain sizes");
  }
  if (!env.subset_of(SiteSet::range(1, n))) {
    throw UsageError("environment block out of range");
  }
  for (const auto& [key, c] : h_sys.terms()) {
    if (((key.first | key.second) & env.mask()) != 0) {
      throw UsageError("system Hamiltonian has support on the environment");
    }
  }
  const std::uint64_t env_mask = env.mask();
  for (const auto& [key, c] : h_env.terms()) {
    if (((key.first | key.second) & ~env_mask) != 0) {
      throw UsageError("environment Hamiltonian has support on the system");
    }
  }
  if (!partial_trace(a, env).empty()) {
    throw UsageError(
        "operator does not have vanishing environment trace; the identities "
        "assume Tr_E(A) = 0");
  }
  TraceIdentityVerdict v;
  v.left_product = partial_trace(a * h_sys, env).empty();
  v.right_product = partial_trace(h_sys * a, env).empty();
  v.env_commutator = partial_trace(commutator(a, h_env), env).empty();
  return v;
}

/// Truncated conjugation sum_{k<=K} (it)^k/k! A_k, densified. Converges to
/// exp(-iHt) R exp(+iHt) as K grows; useful for t*||H|| of order one with
/// K around 20.
inline DenseOperator bch_truncated_conjugation(
    const PauliSum& r, const PauliSum& h, double t, int depth,
    std::size_t term_cap = kDefaultTermCap,
    int dense_cap = kDefaultDenseCap) {
  const std::vector<PauliSum> series =
      nested_commutators(r, h, depth, term_cap);
  DenseOperator acc = DenseOperator::zero(r.num_sites());
  Complex factor{1.0, 0.0};
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (k > 0) factor *= Complex{0.0, t} / static_cast<double>(k);
    acc.mat += factor * to_dense(series[k], dense_cap).mat;
  }
  return acc;
}

}  // namespace spinchain
