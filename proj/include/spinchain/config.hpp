#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinchain/channel.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/experiments.hpp"
#include "spinchain/io.hpp"
#include "spinchain/model.hpp"
#include "spinchain/random.hpp"
#include "spinchain/series.hpp"

namespace spinchain {

using Json = nlohmann::ordered_json;

struct TimeGridSpec {
  double start = 0.0;
  double stop = 10.0;
  int steps = 101;

  std::vector<double> materialize() const {
    return linear_grid(start, stop, steps);
  }
};

struct ChannelSpec {
  std::string name = "projective_z";
  double p = 0.25;                    // phase_flip only
  int ancilla_dim = 2;                // random only
  std::optional<std::uint64_t> seed;  // random only; default derives from run seed
};

struct StateSpec {
  std::string kind = "haar_mixed";  // haar_mixed | haar_pure | basis | file
  double mix = 0.3;                 // haar_mixed only
  std::string bits;                 // basis only, e.g. "00"
  std::string path;                 // file only, operator line format
};

struct ScenarioConfig {
  std::string variant = "conforming";
  double rz = 0.8;         // rz_violation
  double bn = 1.0;         // bn_field
  double cut_field = 1.0;  // wrong_hamiltonian
  double delta = 0.1;      // finite_delta
  bool back_evolved = true;
};

struct SweepSpec {
  std::vector<int> chain_sizes = {3, 4, 5, 6};
  int draws = 25;
  std::vector<std::string> channels = {"projective_z", "projective_x",
                                       "depolarizing", "random"};
};

/// Parsed run configuration; one schema shared by every subcommand, each
/// command reads the fields it needs.
struct RunConfig {
  int num_sites = 3;
  int cut = 2;
  std::vector<double> couplings;
  std::vector<double> fields;
  std::optional<double> rx, ry, rz;  // absent = drawn from the run seed
  TimeGridSpec grid;
  std::uint64_t seed = 0;
  ChannelSpec channel;
  StateSpec state;
  ScenarioConfig scenario;
  SweepSpec sweep;
  int depth = kDefaultSeriesDepth;
  std::optional<std::string> expect;  // "signal" | "no_signal"
  Thresholds thresholds;

  std::filesystem::path base_dir;  // directory of the config file
  std::string raw_text;            // original bytes, for hashing and echo
};

namespace detail {

inline int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

template <typename T>
T field_as(const Json& j, const std::string& context, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(context + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const std::string& context, const std::string& key,
           T fallback) {
  if (!j.contains(key)) return fallback;
  return field_as<T>(j, context, key);
}

inline void check_known_keys(const Json& j, const std::string& context,
                             std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError(context + ": unknown field '" + key + "'");
    }
  }
}

}  // namespace detail

inline ChannelSpec parse_channel_spec(const Json& j,
                                      const std::string& context) {
  ChannelSpec spec;
  if (j.is_string()) {
    spec.name = j.get<std::string>();
    return spec;
  }
  if (!j.is_object()) {
    throw ConfigError(context + ": channel must be a name or an object");
  }
  detail::check_known_keys(j, context + ".channel",
                           {"name", "p", "ancilla_dim", "seed"});
  spec.name = detail::field_as<std::string>(j, context, "name");
  spec.p = detail::field_or<double>(j, context, "p", spec.p);
  spec.ancilla_dim =
      detail::field_or<int>(j, context, "ancilla_dim", spec.ancilla_dim);
  if (j.contains("seed")) {
    spec.seed = detail::field_as<std::uint64_t>(j, context, "seed");
  }
  return spec;
}

inline RunConfig parse_config_json(const Json& j, const std::string& context,
                                   const std::filesystem::path& base_dir) {
  if (!j.is_object()) {
    throw ConfigError(context + ": top level must be an object");
  }
  detail::check_known_keys(
      j, context,
      {"N", "n", "seed", "couplings", "fields", "bloch", "channel", "state",
       "time_grid", "depth", "scenario", "expect", "sweep", "thresholds"});

  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.num_sites = detail::field_as<int>(j, context, "N");
  cfg.cut = detail::field_or<int>(j, context, "n", 2);
  if (!j.contains("seed")) {
    throw ConfigError(context +
                      ": field 'seed' is mandatory (runs must be reproducible "
                      "from config + seed alone)");
  }
  cfg.seed = detail::field_as<std::uint64_t>(j, context, "seed");
  cfg.couplings =
      detail::field_or<std::vector<double>>(j, context, "couplings", {});
  cfg.fields = detail::field_or<std::vector<double>>(j, context, "fields", {});

  if (j.contains("bloch")) {
    const auto v = detail::field_as<std::vector<double>>(j, context, "bloch");
    if (v.size() != 2 && v.size() != 3) {
      throw ConfigError(context +
                        ": field 'bloch' must be [r_x, r_y] or [r_x, r_y, "
                        "r_z]");
    }
    cfg.rx = v[0];
    cfg.ry = v[1];
    cfg.rz = v.size() == 3 ? v[2] : 0.0;
  }

  if (j.contains("time_grid")) {
    const Json& g = j.at("time_grid");
    detail::check_known_keys(g, context + ".time_grid",
                             {"start", "stop", "steps"});
    cfg.grid.start = detail::field_or<double>(g, context, "start", 0.0);
    cfg.grid.stop = detail::field_or<double>(g, context, "stop", 10.0);
    cfg.grid.steps = detail::field_or<int>(g, context, "steps", 101);
  }

  if (j.contains("channel")) {
    cfg.channel = parse_channel_spec(j.at("channel"), context);
  }

  if (j.contains("state")) {
    const Json& s = j.at("state");
    detail::check_known_keys(s, context + ".state",
                             {"kind", "mix", "bits", "path"});
    cfg.state.kind = detail::field_or<std::string>(s, context, "kind",
                                                   cfg.state.kind);
    cfg.state.mix = detail::field_or<double>(s, context, "mix", cfg.state.mix);
    cfg.state.bits = detail::field_or<std::string>(s, context, "bits", "");
    cfg.state.path = detail::field_or<std::string>(s, context, "path", "");
  }

  if (j.contains("scenario")) {
    const Json& s = j.at("scenario");
    detail::check_known_keys(
        s, context + ".scenario",
        {"variant", "rz", "bn", "cut_field", "delta", "back_evolved"});
    cfg.scenario.variant =
        detail::field_or<std::string>(s, context, "variant", "conforming");
    cfg.scenario.rz = detail::field_or<double>(s, context, "rz", 0.8);
    cfg.scenario.bn = detail::field_or<double>(s, context, "bn", 1.0);
    cfg.scenario.cut_field =
        detail::field_or<double>(s, context, "cut_field", 1.0);
    cfg.scenario.delta = detail::field_or<double>(s, context, "delta", 0.1);
    cfg.scenario.back_evolved =
        detail::field_or<bool>(s, context, "back_evolved", true);
  }

  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    detail::check_known_keys(s, context + ".sweep",
                             {"N", "draws", "channels"});
    cfg.sweep.chain_sizes = detail::field_or<std::vector<int>>(
        s, context, "N", cfg.sweep.chain_sizes);
    cfg.sweep.draws = detail::field_or<int>(s, context, "draws", 25);
    cfg.sweep.channels = detail::field_or<std::vector<std::string>>(
        s, context, "channels", cfg.sweep.channels);
  }

  if (j.contains("thresholds")) {
    const Json& t = j.at("thresholds");
    detail::check_known_keys(t, context + ".thresholds",
                             {"no_signal", "signal"});
    cfg.thresholds.no_signal =
        detail::field_or<double>(t, context, "no_signal", 1e-9);
    cfg.thresholds.signal =
        detail::field_or<double>(t, context, "signal", 1e-3);
  }

  cfg.depth = detail::field_or<int>(j, context, "depth", cfg.depth);
  if (j.contains("expect")) {
    const auto e = detail::field_as<std::string>(j, context, "expect");
    if (e != "signal" && e != "no_signal") {
      throw ConfigError(context +
                        ": field 'expect' must be 'signal' or 'no_signal'");
    }
    cfg.expect = e;
  }
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text,
                                   const std::string& context,
                                   const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(context + ": parse error at line " +
                      std::to_string(detail::line_of_byte(text, e.byte)) +
                      ": " + e.what());
  }
  RunConfig cfg = parse_config_json(j, context, base_dir);
  cfg.raw_text = text;
  return cfg;
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string(),
                           path.has_parent_path() ? path.parent_path()
                                                  : std::filesystem::path("."));
}

/// --- realization: config values to domain objects -----------------------

inline ChainConfig realize_chain(const RunConfig& cfg) {
  ChainConfig chain;
  chain.num_sites = cfg.num_sites;
  chain.cut = cfg.cut;
  chain.couplings = cfg.couplings;
  chain.fields = cfg.fields;
  chain.time_grid = cfg.grid.materialize();
  chain.validate();
  return chain;
}

inline QuantumChannel realize_channel(const ChannelSpec& spec,
                                      std::uint64_t run_seed) {
  if (spec.name == "identity") return identity_channel();
  if (spec.name == "projective_z") return projective_z_channel();
  if (spec.name == "projective_x") return projective_x_channel();
  if (spec.name == "depolarizing") return depolarizing_channel();
  if (spec.name == "phase_flip") return phase_flip_channel(spec.p);
  if (spec.name == "random") {
    const std::uint64_t s =
        spec.seed ? *spec.seed : mix_seed(run_seed, 0xC4A27ULL);
    return random_channel(s, spec.ancilla_dim);
  }
  throw ConfigError("unknown channel '" + spec.name +
                    "' (known: identity, projective_z, projective_x, "
                    "depolarizing, phase_flip, random)");
}

/// Builds the block state on the N-1 non-cut sites from the state spec.
inline DenseOperator realize_block_state(const RunConfig& cfg,
                                         RngEngine& rng) {
  const int block_sites = cfg.num_sites - 1;
  const StateSpec& s = cfg.state;
  if (s.kind == "haar_mixed") return random_state(block_sites, rng, s.mix);
  if (s.kind == "haar_pure") return haar_pure_state(block_sites, rng);
  if (s.kind == "basis") {
    if (static_cast<int>(s.bits.size()) != block_sites) {
      throw ConfigError("state.bits must have one bit per non-cut site (" +
                        std::to_string(block_sites) + ")");
    }
    std::uint64_t idx = 0;
    for (char c : s.bits) {
      if (c != '0' && c != '1') {
        throw ConfigError("state.bits must be a 0/1 string");
      }
      idx = (idx << 1) | static_cast<std::uint64_t>(c == '1');
    }
    DenseOperator rho = DenseOperator::zero(block_sites);
    rho.mat(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)) =
        1.0;
    return rho;
  }
  if (s.kind == "file") {
    const std::filesystem::path p = cfg.base_dir / s.path;
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open state file: " + p.string());
    const PauliSum sum = read_pauli_sum(in, block_sites);
    DenseOperator rho = to_dense(sum);
    validate_state(rho);
    return rho;
  }
  throw ConfigError("unknown state kind '" + s.kind +
                    "' (known: haar_mixed, haar_pure, basis, file)");
}

/// Seeded initial-state spec; Bloch components come from the config when
/// present, otherwise from the run's random stream.
inline InitialStateSpec realize_state_spec(const RunConfig& cfg,
                                           RngEngine& rng) {
  InitialStateSpec spec;
  spec.rest_state = realize_block_state(cfg, rng);
  if (cfg.rx) {
    spec.r_x = *cfg.rx;
    spec.r_y = cfg.ry.value_or(0.0);
    spec.r_z = cfg.rz.value_or(0.0);
  } else {
    const auto [x, y] = random_bloch_xy(rng);
    spec.r_x = x;
    spec.r_y = y;
  }
  return spec;
}

inline ScenarioSpec::Variant parse_variant(const std::string& name) {
  if (name == "conforming") return ScenarioSpec::Variant::Conforming;
  if (name == "rz_violation") return ScenarioSpec::Variant::RzViolation;
  if (name == "bn_field") return ScenarioSpec::Variant::BnField;
  if (name == "wrong_hamiltonian") {
    return ScenarioSpec::Variant::WrongHamiltonian;
  }
  if (name == "finite_delta") return ScenarioSpec::Variant::FiniteDelta;
  throw ConfigError("unknown scenario variant '" + name +
                    "' (known: conforming, rz_violation, bn_field, "
                    "wrong_hamiltonian, finite_delta)");
}

inline ScenarioSpec realize_scenario(const RunConfig& cfg) {
  ScenarioSpec sc;
  sc.variant = parse_variant(cfg.scenario.variant);
  sc.cfg = realize_chain(cfg);
  sc.seed = cfg.seed;
  sc.channel = realize_channel(cfg.channel, cfg.seed);
  sc.bn = cfg.scenario.bn;
  sc.cut_field = cfg.scenario.cut_field;
  sc.delta = cfg.scenario.delta;
  sc.back_evolved = cfg.scenario.back_evolved;

  RngEngine rng(cfg.seed);
  if (sc.variant == ScenarioSpec::Variant::BnField) {
    sc.initial_full = random_product_state(cfg.num_sites, rng);
  } else {
    sc.state = realize_state_spec(cfg, rng);
    if (sc.variant == ScenarioSpec::Variant::RzViolation) {
      sc.state.r_z = cfg.rz.value_or(cfg.scenario.rz);
      // keep the Bloch vector inside the ball
      const double plane =
          sc.state.r_x * sc.state.r_x + sc.state.r_y * sc.state.r_y;
      const double room = 1.0 - sc.state.r_z * sc.state.r_z;
      if (plane > room) {
        const double shrink = std::sqrt(room / plane) * 0.999;
        sc.state.r_x *= shrink;
        sc.state.r_y *= shrink;
      }
    }
  }
  return sc;
}

}  // namespace spinchain
