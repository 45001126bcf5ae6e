#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "spinchain/config.hpp"
#include "spinchain/version.hpp"

namespace spinchain {

/// Process exit codes. Verdict mismatches are distinct from usage errors
/// so CI can tell "the physics disagreed" from "the invocation was wrong".
enum ExitCode : int {
  kExitOk = 0,
  kExitVerdictMismatch = 1,
  kExitConfigError = 2,
  kExitResourceError = 3,
  kExitValidationError = 4,
  kExitInternalError = 5,
};

struct CliOptions {
  std::string command;
  std::string config_path;
  std::string out_dir;  // empty: environment variable, then ./out
  std::optional<std::uint64_t> seed;
  std::optional<std::string> grid;  // START:STOP:STEPS
  std::optional<int> depth;
  int jobs = 1;
  bool dump_operators = false;
};

/// Everything needed to reproduce a run. The timestamp lives only in
/// manifest.json; report payloads depend on (command, config, overrides)
/// alone, so reruns are byte identical.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string timestamp;
  std::string version = kVersion;
  std::string config_hash;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& data, std::uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

inline std::string manifest_hash(const std::string& command,
                                 const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = detail::fnv1a64(command, h);
  h = detail::fnv1a64("\x1f", h);
  h = detail::fnv1a64(cfg.raw_text, h);
  h = detail::fnv1a64("\x1f", h);
  h = detail::fnv1a64(std::to_string(cfg.seed), h);
  h = detail::fnv1a64("\x1f" + std::to_string(cfg.grid.start) + ":" +
                          std::to_string(cfg.grid.stop) + ":" +
                          std::to_string(cfg.grid.steps) + "\x1f" +
                          std::to_string(cfg.depth),
                      h);
  return detail::hash_hex(h);
}

inline std::filesystem::path resolve_out_dir(const CliOptions& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* env = std::getenv("SPINCHAIN_OUT"); env && *env) return env;
  return "out";
}

/// Applies CLI overrides (seed, grid, depth) onto a parsed config.
inline void apply_overrides(RunConfig& cfg, const CliOptions& opts) {
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.depth) cfg.depth = *opts.depth;
  if (opts.grid) {
    const std::string& g = *opts.grid;
    const auto c1 = g.find(':');
    const auto c2 = g.find(':', c1 == std::string::npos ? 0 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ConfigError("--grid expects START:STOP:STEPS, got '" + g + "'");
    }
    try {
      cfg.grid.start = std::stod(g.substr(0, c1));
      cfg.grid.stop = std::stod(g.substr(c1 + 1, c2 - c1 - 1));
      cfg.grid.steps = std::stoi(g.substr(c2 + 1));
    } catch (const std::exception&) {
      throw ConfigError("--grid expects numeric START:STOP:STEPS, got '" + g +
                        "'");
    }
  }
}

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

inline Json thresholds_json(const Thresholds& th) {
  Json j;
  j["no_signal"] = th.no_signal;
  j["signal"] = th.signal;
  return j;
}

inline Json signal_report_json(const SignalReport& r) {
  Json j;
  j["verdict"] = verdict_name(r.verdict);
  j["max_distance"] = r.max_distance;
  if (r.has_signal_time()) {
    j["first_signal_time"] = r.first_signal_time;
  } else {
    j["first_signal_time"] = nullptr;
  }
  j["points"] = r.distances.size();
  j["thresholds"] = thresholds_json(r.thresholds);
  return j;
}

inline std::string distance_csv(const SignalReport& r,
                                const std::string& hash) {
  std::string out = "# manifest=" + hash + "\nt,distance\n";
  for (std::size_t i = 0; i < r.time_grid.size(); ++i) {
    out += format_double(r.time_grid[i]) + "," +
           format_double(r.distances[i]) + "\n";
  }
  return out;
}

inline Json series_report_json(const SeriesReport& r) {
  Json j;
  j["cut"] = r.cut;
  j["all_env_trace_zero"] = r.all_env_trace_zero();
  j["all_flags_hold"] = r.all_flags_hold();
  j["first_env_trace_failure"] = r.first_env_trace_failure();
  j["induction_consistent"] = r.induction_consistent();
  Json orders = Json::array();
  for (const auto& o : r.orders) {
    Json row;
    row["k"] = o.order;
    row["terms"] = o.term_count;
    row["trE_zero"] = o.env_trace_zero;
    row["c0_zero"] = o.c0_traceless;
    row["c3_zero"] = o.c3_traceless;
    row["max_residual_coeff"] = o.max_residual_coeff;
    orders.push_back(row);
  }
  j["orders"] = orders;
  return j;
}

inline std::string series_csv(const SeriesReport& r, const std::string& hash) {
  std::string out = "# manifest=" + hash + "\nk,terms,trE_zero,c0_zero,c3_zero\n";
  for (const auto& o : r.orders) {
    out += std::to_string(o.order) + "," + std::to_string(o.term_count) + "," +
           std::to_string(o.env_trace_zero ? 1 : 0) + "," +
           std::to_string(o.c0_traceless ? 1 : 0) + "," +
           std::to_string(o.c3_traceless ? 1 : 0) + "\n";
  }
  return out;
}

inline Json manifest_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["config"] = m.config_path;
  j["seed"] = m.seed;
  j["out_dir"] = m.out_dir;
  j["timestamp"] = m.timestamp;
  j["version"] = m.version;
  j["config_hash"] = m.config_hash;
  return j;
}

inline Json config_echo(const RunConfig& cfg) {
  if (cfg.raw_text.empty()) return Json::object();
  return Json::parse(cfg.raw_text);
}

struct RunContext {
  RunConfig cfg;
  RunManifest manifest;
  std::filesystem::path out;
};

inline RunContext prepare(const CliOptions& opts, bool config_required = true) {
  RunContext ctx;
  if (opts.config_path.empty()) {
    if (config_required) {
      throw ConfigError("--config is required for this command");
    }
    ctx.cfg.raw_text = "{}";
    ctx.cfg.seed = 7;  // built-in baseline default
  } else {
    ctx.cfg = load_config_file(opts.config_path);
  }
  apply_overrides(ctx.cfg, opts);
  ctx.out = resolve_out_dir(opts);
  std::filesystem::create_directories(ctx.out);
  ctx.manifest.command = opts.command;
  ctx.manifest.config_path = opts.config_path;
  ctx.manifest.seed = ctx.cfg.seed;
  ctx.manifest.out_dir = ctx.out.string();
  ctx.manifest.timestamp = utc_timestamp();
  ctx.manifest.config_hash = manifest_hash(opts.command, ctx.cfg);
  return ctx;
}

inline void write_manifest(const RunContext& ctx) {
  write_file(ctx.out / "manifest.json", json_text(manifest_json(ctx.manifest)));
}

inline std::optional<Verdict> expected_from_config(
    const RunConfig& cfg, std::optional<Verdict> fallback) {
  if (cfg.expect) {
    return *cfg.expect == "signal" ? Verdict::Signal : Verdict::NoSignal;
  }
  return fallback;
}

}  // namespace detail

/// verify: the conforming protocol checked two independent ways (dense
/// time-domain distances and the exact symbolic series) on one setup.
inline int cmd_verify(const CliOptions& opts, std::ostream& log) {
  detail::RunContext ctx = detail::prepare(opts);
  const ChainConfig chain = realize_chain(ctx.cfg);
  RngEngine rng(ctx.cfg.seed);
  const InitialStateSpec spec = realize_state_spec(ctx.cfg, rng);
  const QuantumChannel ch = realize_channel(ctx.cfg.channel, ctx.cfg.seed);

  SignalReport report = run_no_signaling(chain, spec, ch, ctx.cfg.thresholds);
  report.seed = ctx.cfg.seed;

  const DenseOperator rho = build_initial_state(spec, chain);
  const DenseOperator sigma = apply_channel(ch, rho, chain.num_sites);
  const PauliSum difference =
      pauli_expand(DenseOperator(chain.num_sites, sigma.mat - rho.mat));
  const std::vector<PauliSum> series =
      nested_commutators(difference, build_hamiltonian(chain), ctx.cfg.depth);
  const SeriesReport sreport =
      check_traceless_series(series, chain.environment_sites());

  const bool dense_ok = report.verdict == Verdict::NoSignal;
  const bool series_ok = sreport.all_flags_hold();

  detail::write_file(ctx.out / "distance.csv",
                     detail::distance_csv(report, ctx.manifest.config_hash));
  detail::write_file(ctx.out / "series.csv",
                     detail::series_csv(sreport, ctx.manifest.config_hash));
  Json summary;
  summary["command"] = "verify";
  summary["config_hash"] = ctx.manifest.config_hash;
  summary["seed"] = ctx.cfg.seed;
  summary["channel"] = ch.label;
  summary["dense"] = detail::signal_report_json(report);
  summary["series"] = detail::series_report_json(sreport);
  summary["pass"] = dense_ok && series_ok;
  summary["config"] = detail::config_echo(ctx.cfg);
  detail::write_file(ctx.out / "summary.json", detail::json_text(summary));
  detail::write_manifest(ctx);

  log << "verify: dense max distance = " << report.max_distance << " ("
      << verdict_name(report.verdict) << "), series orders 0.."
      << ctx.cfg.depth << " "
      << (series_ok ? "all traceless" : "trace failure at order " +
                                            std::to_string(
                                                sreport.first_env_trace_failure()))
      << "\n";
  if (!dense_ok || !series_ok) {
    log << "verify: verdict mismatch (expected no_signal on both routes)\n";
    return kExitVerdictMismatch;
  }
  return kExitOk;
}

/// series: the symbolic route alone.
inline int cmd_series(const CliOptions& opts, std::ostream& log) {
  detail::RunContext ctx = detail::prepare(opts);
  const ChainConfig chain = realize_chain(ctx.cfg);
  RngEngine rng(ctx.cfg.seed);
  const InitialStateSpec spec = realize_state_spec(ctx.cfg, rng);
  const QuantumChannel ch = realize_channel(ctx.cfg.channel, ctx.cfg.seed);

  const DenseOperator rho = build_initial_state(spec, chain);
  const DenseOperator sigma = apply_channel(ch, rho, chain.num_sites);
  const PauliSum difference =
      pauli_expand(DenseOperator(chain.num_sites, sigma.mat - rho.mat));
  const std::vector<PauliSum> series =
      nested_commutators(difference, build_hamiltonian(chain), ctx.cfg.depth);
  const SeriesReport sreport =
      check_traceless_series(series, chain.environment_sites());

  detail::write_file(ctx.out / "series.csv",
                     detail::series_csv(sreport, ctx.manifest.config_hash));
  Json summary;
  summary["command"] = "series";
  summary["config_hash"] = ctx.manifest.config_hash;
  summary["seed"] = ctx.cfg.seed;
  summary["channel"] = ch.label;
  summary["series"] = detail::series_report_json(sreport);
  summary["pass"] = sreport.all_flags_hold();
  summary["config"] = detail::config_echo(ctx.cfg);
  detail::write_file(ctx.out / "summary.json", detail::json_text(summary));
  detail::write_manifest(ctx);

  if (opts.dump_operators) {
    for (std::size_t k = 0; k < series.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "order_%02zu.txt", k);
      detail::write_file(ctx.out / name, pauli_sum_to_string(series[k]));
    }
  }

  for (const auto& o : sreport.orders) {
    log << "k=" << o.order << " terms=" << o.term_count << " trE_zero="
        << o.env_trace_zero << " c0_zero=" << o.c0_traceless
        << " c3_zero=" << o.c3_traceless << "\n";
  }
  return sreport.all_flags_hold() ? kExitOk : kExitVerdictMismatch;
}

/// counterexample: run one scenario and compare against its expected
/// verdict (config "expect" overrides the variant default).
inline int cmd_counterexample(const CliOptions& opts, std::ostream& log) {
  detail::RunContext ctx = detail::prepare(opts);
  const ScenarioSpec scenario = realize_scenario(ctx.cfg);

  Json extra = Json::object();
  SignalReport report;
  if (scenario.variant == ScenarioSpec::Variant::FiniteDelta) {
    const DenseOperator omega =
        scenario.back_evolved
            ? back_evolved_initial(scenario.cfg, scenario.state,
                                   scenario.delta)
            : build_initial_state(scenario.state, scenario.cfg);
    const FiniteDurationReport fd =
        run_finite_duration(scenario.cfg, omega, scenario.channel,
                            scenario.delta, ctx.cfg.thresholds);
    report = fd.signal;
    extra["delta"] = fd.delta;
    extra["back_evolved"] = scenario.back_evolved;
    extra["conforms_at_delta"] = fd.conforms_at_delta;
    extra["cut_z_residual"] = fd.cut_z_residual;
    extra["unitary_deviation"] = fd.unitary_deviation;
  } else {
    report = run_counterexample(scenario, ctx.cfg.thresholds);
  }
  report.seed = ctx.cfg.seed;

  const std::optional<Verdict> expected =
      detail::expected_from_config(ctx.cfg, scenario.expected());

  detail::write_file(ctx.out / "distance.csv",
                     detail::distance_csv(report, ctx.manifest.config_hash));
  Json summary;
  summary["command"] = "counterexample";
  summary["config_hash"] = ctx.manifest.config_hash;
  summary["seed"] = ctx.cfg.seed;
  summary["variant"] = variant_name(scenario.variant);
  summary["channel"] = scenario.channel.label;
  summary["report"] = detail::signal_report_json(report);
  if (!extra.empty()) summary["finite_duration"] = extra;
  summary["expected"] =
      expected ? Json(verdict_name(*expected)) : Json(nullptr);
  const bool ok = !expected || report.verdict == *expected;
  summary["pass"] = ok;
  summary["config"] = detail::config_echo(ctx.cfg);
  detail::write_file(ctx.out / "summary.json", detail::json_text(summary));
  detail::write_manifest(ctx);

  log << "counterexample[" << variant_name(scenario.variant)
      << "]: max distance = " << report.max_distance << " ("
      << verdict_name(report.verdict) << ")";
  if (expected) log << ", expected " << verdict_name(*expected);
  log << "\n";
  return ok ? kExitOk : kExitVerdictMismatch;
}

/// baseline: the isolated two-spin fact. Random states against the
/// channel catalog plus seeded random channels.
inline int cmd_baseline(const CliOptions& opts, std::ostream& log) {
  detail::RunContext ctx = detail::prepare(opts, /*config_required=*/false);
  const int draws = 20;
  RngEngine rng(ctx.cfg.seed);

  std::vector<QuantumChannel> channels = standard_channels();
  std::string csv =
      "# manifest=" + ctx.manifest.config_hash + "\ndraw,channel,distance\n";
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    const DenseOperator rho = random_state(2, rng);
    QuantumChannel ch =
        (d % 2 == 0)
            ? channels[static_cast<std::size_t>(d / 2) % channels.size()]
            : random_channel(mix_seed(ctx.cfg.seed, static_cast<std::uint64_t>(d)),
                             d % 4 == 1 ? 2 : 4);
    const SignalReport r = run_two_qubit_baseline(rho, ch);
    worst = std::max(worst, r.max_distance);
    csv += std::to_string(d) + "," + ch.label + "," +
           format_double(r.max_distance) + "\n";
  }
  const bool ok = worst <= 1e-12;

  detail::write_file(ctx.out / "baseline.csv", csv);
  Json summary;
  summary["command"] = "baseline";
  summary["config_hash"] = ctx.manifest.config_hash;
  summary["seed"] = ctx.cfg.seed;
  summary["draws"] = draws;
  summary["max_distance"] = worst;
  summary["tolerance"] = 1e-12;
  summary["pass"] = ok;
  detail::write_file(ctx.out / "summary.json", detail::json_text(summary));
  detail::write_manifest(ctx);

  log << "baseline: worst reduced-state distance over " << draws
      << " draws = " << worst << (ok ? " (pass)" : " (FAIL)") << "\n";
  return ok ? kExitOk : kExitVerdictMismatch;
}

namespace detail {

struct SweepCell {
  int chain_size = 0;
  int cut = 0;
  std::string channel;
  int draw = 0;
  std::uint64_t seed = 0;
  double max_distance = 0.0;
  Verdict verdict = Verdict::Ambiguous;
};

}  // namespace detail

/// sweep: the conforming protocol over a lattice of (N, n, channel, draw)
/// cells, each with a derived seed so the lattice is reproducible and
/// order independent.
inline int cmd_sweep(const CliOptions& opts, std::ostream& log) {
  detail::RunContext ctx = detail::prepare(opts);
  const SweepSpec& sw = ctx.cfg.sweep;
  if (sw.draws < 1) throw ConfigError("sweep.draws must be >= 1");

  std::vector<detail::SweepCell> cells;
  for (int n_sites : sw.chain_sizes) {
    for (int cut = 2; cut <= n_sites - 1; ++cut) {
      for (std::size_t c = 0; c < sw.channels.size(); ++c) {
        for (int d = 0; d < sw.draws; ++d) {
          detail::SweepCell cell;
          cell.chain_size = n_sites;
          cell.cut = cut;
          cell.channel = sw.channels[c];
          cell.draw = d;
          cell.seed = mix_seed(ctx.cfg.seed,
                               static_cast<std::uint64_t>(n_sites),
                               static_cast<std::uint64_t>(cut),
                               static_cast<std::uint64_t>(c),
                               static_cast<std::uint64_t>(d));
          cells.push_back(cell);
        }
      }
    }
  }

  const auto run_cell = [&](detail::SweepCell& cell) {
    ChainConfig chain;
    chain.num_sites = cell.chain_size;
    chain.cut = cell.cut;
    chain.time_grid = ctx.cfg.grid.materialize();
    RngEngine rng(cell.seed);
    InitialStateSpec spec;
    spec.rest_state = random_state(cell.chain_size - 1, rng, 0.3);
    const auto [x, y] = random_bloch_xy(rng);
    spec.r_x = x;
    spec.r_y = y;
    ChannelSpec chspec;
    chspec.name = cell.channel;
    const QuantumChannel ch = realize_channel(chspec, cell.seed);
    const SignalReport r =
        run_no_signaling(chain, spec, ch, ctx.cfg.thresholds);
    cell.max_distance = r.max_distance;
    cell.verdict = r.verdict;
  };

  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    for (auto& cell : cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          run_cell(cells[i]);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  std::size_t pass = 0;
  double worst = 0.0;
  std::string csv = "# manifest=" + ctx.manifest.config_hash +
                    "\nN,n,channel,draw,seed,max_distance,verdict\n";
  for (const auto& cell : cells) {
    if (cell.verdict == Verdict::NoSignal) ++pass;
    worst = std::max(worst, cell.max_distance);
    csv += std::to_string(cell.chain_size) + "," + std::to_string(cell.cut) +
           "," + cell.channel + "," + std::to_string(cell.draw) + "," +
           std::to_string(cell.seed) + "," + format_double(cell.max_distance) +
           "," + verdict_name(cell.verdict) + "\n";
  }
  const bool ok = pass == cells.size();

  detail::write_file(ctx.out / "sweep.csv", csv);
  Json summary;
  summary["command"] = "sweep";
  summary["config_hash"] = ctx.manifest.config_hash;
  summary["seed"] = ctx.cfg.seed;
  summary["cells"] = cells.size();
  summary["no_signal_cells"] = pass;
  summary["worst_max_distance"] = worst;
  summary["pass"] = ok;
  summary["config"] = detail::config_echo(ctx.cfg);
  detail::write_file(ctx.out / "summary.json", detail::json_text(summary));
  detail::write_manifest(ctx);

  log << "sweep: " << pass << "/" << cells.size()
      << " cells no-signal, worst max distance = " << worst << "\n";
  return ok ? kExitOk : kExitVerdictMismatch;
}

/// Dispatcher with uniform diagnostics; every failure path produces a
/// structured message on the log stream and a mapped exit code.
inline int run_command(const CliOptions& opts, std::ostream& log,
                       std::ostream& err) {
  try {
    if (opts.command == "verify") return cmd_verify(opts, log);
    if (opts.command == "series") return cmd_series(opts, log);
    if (opts.command == "counterexample") {
      return cmd_counterexample(opts, log);
    }
    if (opts.command == "baseline") return cmd_baseline(opts, log);
    if (opts.command == "sweep") return cmd_sweep(opts, log);
    err << "error: unknown command '" << opts.command << "'\n";
    return kExitConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const ResourceError& e) {
    err << "resource limit: " << e.what() << "\n";
    return kExitResourceError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidationError;
  } catch (const StructureError& e) {
    err << "structure error: " << e.what() << "\n";
    return kExitValidationError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
}

}  // namespace spinchain
