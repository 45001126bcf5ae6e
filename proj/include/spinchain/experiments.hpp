#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spinchain/channel.hpp"
#include "spinchain/dense.hpp"
#include "spinchain/model.hpp"
#include "spinchain/pauli.hpp"
#include "spinchain/random.hpp"

namespace spinchain {

/// Verdict thresholds. Six decades apart by default so round-off can
/// never flip a verdict.
struct Thresholds {
  double no_signal = 1e-9;
  double signal = 1e-3;
};

enum class Verdict { NoSignal, Signal, Ambiguous };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::NoSignal: return "no_signal";
    case Verdict::Signal: return "signal";
    case Verdict::Ambiguous: return "ambiguous";
  }
  return "ambiguous";
}

/// Time series of trace distances between the two arms of an experiment,
/// reduced to the watched block.
struct SignalReport {
  std::vector<double> time_grid;
  std::vector<double> distances;
  double max_distance = 0.0;
  /// Earliest grid time with distance above the signal threshold; NaN if
  /// none.
  double first_signal_time = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::Ambiguous;
  Thresholds thresholds;
  std::uint64_t seed = 0;
  std::string description;

  bool has_signal_time() const { return !std::isnan(first_signal_time); }
};

inline SignalReport make_signal_report(std::vector<double> grid,
                                       std::vector<double> distances,
                                       const Thresholds& th) {
  SignalReport r;
  r.time_grid = std::move(grid);
  r.distances = std::move(distances);
  r.thresholds = th;
  for (std::size_t i = 0; i < r.distances.size(); ++i) {
    const double d = r.distances[i];
    r.max_distance = std::max(r.max_distance, d);
    if (d > th.signal && std::isnan(r.first_signal_time)) {
      r.first_signal_time = r.time_grid[i];
    }
  }
  if (r.max_distance <= th.no_signal) {
    r.verdict = Verdict::NoSignal;
  } else if (r.max_distance > th.signal) {
    r.verdict = Verdict::Signal;
  } else {
    r.verdict = Verdict::Ambiguous;
  }
  return r;
}

namespace detail {

/// Distance series between the measured and unmeasured arms. The two arms
/// share the unitary, so the evolved difference carries everything:
/// d(t) = (1/2) || Tr_E( U (sigma - rho) U^dagger ) ||_1.
inline std::vector<double> arm_distances(const DenseOperator& h_dense,
                                         const DenseOperator& rho,
                                         const DenseOperator& sigma,
                                         const SiteSet& traced,
                                         const std::vector<double>& grid) {
  const Propagator prop(h_dense);
  const DenseOperator diff(rho.num_sites, sigma.mat - rho.mat);
  std::vector<double> out;
  out.reserve(grid.size());
  for (const DenseOperator& evolved : prop.evolve_grid(diff, grid)) {
    out.push_back(0.5 * trace_norm(partial_trace(evolved, traced)));
  }
  return out;
}

}  // namespace detail

/// Measured arm vs unmeasured arm for an arbitrary full-chain state; no
/// conformance requirements. Counterexample variants reuse this.
inline SignalReport run_measurement_comparison(const ChainConfig& cfg,
                                               const DenseOperator& rho,
                                               const QuantumChannel& ch,
                                               const Thresholds& th = {}) {
  cfg.validate();
  validate_channel(ch);
  const DenseOperator h = dense_hamiltonian(cfg);
  const DenseOperator sigma = apply_channel(ch, rho, cfg.num_sites);
  return make_signal_report(
      cfg.time_grid,
      detail::arm_distances(h, rho, sigma, cfg.environment_sites(),
                            cfg.time_grid),
      th);
}

/// The conforming protocol: equatorial cut-spin state, field-free chain,
/// trace-preserving channel on the last spin. The expected verdict is
/// no-signal at every time.
inline SignalReport run_no_signaling(const ChainConfig& cfg,
                                     const InitialStateSpec& spec,
                                     const QuantumChannel& ch,
                                     const Thresholds& th = {}) {
  cfg.validate();
  if (cfg.num_sites < 3) {
    throw ValidationError(
        "no-signaling run needs chain length N >= 3 (minimum chain with a "
        "system block, a cut spin and a far environment); got N = " +
        std::to_string(cfg.num_sites));
  }
  if (cfg.cut > cfg.num_sites - 1) {
    throw ValidationError(
        "no-signaling run needs cut n <= N-1 so the measured spin lies "
        "beyond the cut");
  }
  if (!cfg.fields_all_zero()) {
    throw ValidationError(
        "no-signaling run requires all transverse fields to vanish");
  }
  if (!spec.conforming()) {
    throw ValidationError(
        "no-signaling run requires the cut spin in the equatorial plane "
        "(r_z = 0); got r_z = " +
        std::to_string(spec.r_z));
  }
  const DenseOperator rho = build_initial_state(spec, cfg);
  SignalReport report = run_measurement_comparison(cfg, rho, ch, th);
  report.description = "no_signaling";
  return report;
}

/// Counterexample scenarios: each deliberately breaks one hypothesis.
struct ScenarioSpec {
  enum class Variant {
    Conforming,
    RzViolation,
    BnField,
    WrongHamiltonian,
    FiniteDelta,
  };

  Variant variant = Variant::RzViolation;
  ChainConfig cfg;
  QuantumChannel channel = projective_x_channel();
  InitialStateSpec state;
  /// Full-chain initial state for the field-comparison variant.
  DenseOperator initial_full;
  double bn = 1.0;         // last-spin field strength, BnField
  double cut_field = 1.0;  // transverse field on the cut spin, WrongHamiltonian
  double delta = 0.1;      // measurement window, FiniteDelta
  bool back_evolved = true;
  std::uint64_t seed = 0;

  std::optional<Verdict> expected() const {
    switch (variant) {
      case Variant::Conforming: return Verdict::NoSignal;
      case Variant::RzViolation: return Verdict::Signal;
      case Variant::BnField: return Verdict::Signal;
      case Variant::WrongHamiltonian: return Verdict::Signal;
      case Variant::FiniteDelta:
        if (back_evolved) return Verdict::NoSignal;
        return std::nullopt;  // reported, not asserted
    }
    return std::nullopt;
  }
};

inline std::string variant_name(ScenarioSpec::Variant v) {
  switch (v) {
    case ScenarioSpec::Variant::Conforming: return "conforming";
    case ScenarioSpec::Variant::RzViolation: return "rz_violation";
    case ScenarioSpec::Variant::BnField: return "bn_field";
    case ScenarioSpec::Variant::WrongHamiltonian: return "wrong_hamiltonian";
    case ScenarioSpec::Variant::FiniteDelta: return "finite_delta";
  }
  return "unknown";
}

/// Two unitary arms, no channel: the chain with and without a transverse
/// field on the last spin, watched from spin 1.
inline SignalReport run_field_comparison(const ChainConfig& cfg,
                                         const DenseOperator& rho,
                                         double bn, const Thresholds& th = {}) {
  cfg.validate();
  if (rho.num_sites != cfg.num_sites) {
    throw UsageError("initial state size does not match chain");
  }
  ChainConfig with_field = cfg;
  with_field.fields.assign(static_cast<std::size_t>(cfg.num_sites), 0.0);
  with_field.fields.back() = bn;

  const Propagator bare(dense_hamiltonian(cfg));
  const Propagator driven(dense_hamiltonian(with_field));
  const SiteSet watched_complement = SiteSet::range(2, cfg.num_sites);
  std::vector<double> distances;
  distances.reserve(cfg.time_grid.size());
  for (double t : cfg.time_grid) {
    const DenseOperator a = partial_trace(bare.evolve(rho, t), watched_complement);
    const DenseOperator b =
        partial_trace(driven.evolve(rho, t), watched_complement);
    distances.push_back(trace_distance(a, b));
  }
  SignalReport report = make_signal_report(cfg.time_grid, distances, th);
  report.description = "field_comparison";
  return report;
}

/// Relaxed protocol: the measurement window lasts until t = delta. The
/// unmeasured arm evolves the initial state throughout; the measured arm
/// applies the channel to the evolved state at t = delta. Also reports
/// whether the evolved state still has a vanishing Z component at the cut
/// spin (the condition the instantaneous theorem needs), plus how far the
/// window unitary is from the identity.
struct FiniteDurationReport {
  SignalReport signal;
  bool conforms_at_delta = false;
  double cut_z_residual = 0.0;    // largest Z_n-sector coefficient at t = delta
  double unitary_deviation = 0.0;  // max-entry |U(delta) - I|
  double delta = 0.0;
};

inline FiniteDurationReport run_finite_duration(
    const ChainConfig& cfg, const DenseOperator& omega,
    const QuantumChannel& ch, double delta, const Thresholds& th = {},
    double conformance_tol = 1e-12) {
  cfg.validate();
  if (delta < 0.0) throw UsageError("measurement window must be nonnegative");
  if (cfg.num_sites < 3 || cfg.cut > cfg.num_sites - 1) {
    throw ValidationError("finite-duration run needs N >= 3 and n <= N-1");
  }
  if (!cfg.fields_all_zero()) {
    throw ValidationError("finite-duration run requires a field-free chain");
  }
  validate_state(omega);
  validate_channel(ch);

  const DenseOperator h = dense_hamiltonian(cfg);
  const Propagator prop(h);
  const DenseOperator rho_delta = prop.evolve(omega, delta);

  FiniteDurationReport out;
  out.delta = delta;
  out.unitary_deviation = max_abs(
      prop.unitary(delta) -
      Eigen::MatrixXcd::Identity(rho_delta.dim(), rho_delta.dim()));
  const SiteComponents parts =
      decompose_at_site(pauli_expand(rho_delta, /*prune=*/false), cfg.cut);
  out.cut_z_residual = parts.z.max_abs_coeff();
  out.conforms_at_delta = out.cut_z_residual <= conformance_tol;

  const DenseOperator sigma_delta =
      apply_channel(ch, rho_delta, cfg.num_sites);
  std::vector<double> grid;
  for (double t : cfg.time_grid) {
    if (t >= delta) grid.push_back(t);
  }
  if (grid.empty()) grid.push_back(delta);
  std::vector<double> offsets;
  offsets.reserve(grid.size());
  for (double t : grid) offsets.push_back(t - delta);

  out.signal = make_signal_report(
      grid,
      detail::arm_distances(h, rho_delta, sigma_delta,
                            cfg.environment_sites(), offsets),
      th);
  out.signal.description = "finite_duration";
  return out;
}

/// Back-evolves a conforming state so that the window ends exactly on it:
/// evolving the returned state for `delta` reproduces
/// build_initial_state(spec, cfg).
inline DenseOperator back_evolved_initial(const ChainConfig& cfg,
                                          const InitialStateSpec& spec,
                                          double delta) {
  const DenseOperator target = build_initial_state(spec, cfg);
  return Propagator(dense_hamiltonian(cfg)).evolve(target, -delta);
}

inline SignalReport run_counterexample(const ScenarioSpec& scenario,
                                       const Thresholds& th = {}) {
  using Variant = ScenarioSpec::Variant;
  switch (scenario.variant) {
    case Variant::Conforming: {
      SignalReport r =
          run_no_signaling(scenario.cfg, scenario.state, scenario.channel, th);
      r.seed = scenario.seed;
      return r;
    }
    case Variant::RzViolation: {
      if (scenario.state.r_z == 0.0) {
        throw UsageError(
            "rz_violation scenario requires a nonzero r_z; got 0");
      }
      const DenseOperator rho = build_initial_state(scenario.state, scenario.cfg);
      SignalReport r =
          run_measurement_comparison(scenario.cfg, rho, scenario.channel, th);
      r.description = "rz_violation";
      r.seed = scenario.seed;
      return r;
    }
    case Variant::BnField: {
      SignalReport r = run_field_comparison(scenario.cfg,
                                            scenario.initial_full,
                                            scenario.bn, th);
      r.description = "bn_field";
      r.seed = scenario.seed;
      return r;
    }
    case Variant::WrongHamiltonian: {
      if (scenario.cut_field == 0.0) {
        throw UsageError(
            "wrong_hamiltonian scenario requires a nonzero field on the cut "
            "spin");
      }
      ChainConfig cfg = scenario.cfg;
      cfg.fields.assign(static_cast<std::size_t>(cfg.num_sites), 0.0);
      cfg.fields[static_cast<std::size_t>(cfg.cut - 1)] = scenario.cut_field;
      const DenseOperator rho = build_initial_state(scenario.state, cfg);
      SignalReport r =
          run_measurement_comparison(cfg, rho, scenario.channel, th);
      r.description = "wrong_hamiltonian";
      r.seed = scenario.seed;
      return r;
    }
    case Variant::FiniteDelta: {
      const DenseOperator omega =
          scenario.back_evolved
              ? back_evolved_initial(scenario.cfg, scenario.state,
                                     scenario.delta)
              : build_initial_state(scenario.state, scenario.cfg);
      FiniteDurationReport fd = run_finite_duration(
          scenario.cfg, omega, scenario.channel, scenario.delta, th);
      fd.signal.seed = scenario.seed;
      return fd.signal;
    }
  }
  throw UsageError("unknown scenario variant");
}

/// The isolated-pair baseline: a channel on the second qubit of a
/// two-qubit state never moves the first qubit's reduced state. Exact up
/// to arithmetic round-off, so the pass band is far tighter than the
/// dynamical runs.
inline SignalReport run_two_qubit_baseline(const DenseOperator& rho,
                                           const QuantumChannel& ch) {
  if (rho.num_sites != 2) {
    throw UsageError("baseline expects a two-qubit state");
  }
  validate_state(rho);
  validate_channel(ch);
  const DenseOperator sigma = apply_channel(ch, rho, 2);
  const SiteSet second = SiteSet::of({2});
  const double d =
      trace_distance(partial_trace(rho, second), partial_trace(sigma, second));
  Thresholds th{1e-12, 1e-3};
  SignalReport report = make_signal_report({0.0}, {d}, th);
  report.description = "two_qubit_baseline";
  return report;
}

}  // namespace spinchain
