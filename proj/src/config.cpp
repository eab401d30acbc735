#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "resilience/experiments.hpp"

namespace resilience {

namespace {

KeySpec num(std::string name, std::string def, std::string help) {
  return {std::move(name), KeyKind::Number, std::move(def), std::move(help), {}};
}
KeySpec integer(std::string name, std::string def, std::string help) {
  return {std::move(name), KeyKind::Integer, std::move(def), std::move(help), {}};
}
KeySpec boolean(std::string name, std::string def, std::string help) {
  return {std::move(name), KeyKind::Boolean, std::move(def), std::move(help), {}};
}
KeySpec text(std::string name, std::string def, std::string help,
             std::vector<std::string> choices = {}) {
  return {std::move(name), KeyKind::Text, std::move(def), std::move(help), std::move(choices)};
}
KeySpec list(std::string name, std::string def, std::string help,
             std::vector<std::string> choices = {}) {
  return {std::move(name), KeyKind::List, std::move(def), std::move(help), std::move(choices)};
}

std::vector<KeySpec> shared_keys() {
  return {text("output_dir", "", "output directory; empty means $RESILIENCE_OUT/<scenario>"),
          integer("seed", "0", "base seed for noise realizations and random states")};
}

std::vector<KeySpec> qimf_keys(const std::string& strength, const std::string& eta) {
  return {num("h_x", "0.809", "transverse field along x"),
          num("h_y", "0.9045", "transverse field along y"),
          num("coupling_j", "1", "XX coupling"),
          num("noise_strength", strength, "disorder strength s in N(0, s)"),
          text("noise_scale", "variance", "whether noise_strength is a variance or a std dev",
               {"variance", "stddev"}),
          num("eta", eta, "imperfection coefficient on every XX bond")};
}

std::vector<KeySpec> quadrature_keys() {
  return {num("quad_rel_tol", "1e-4", "relative stopping tolerance of the quadrature"),
          integer("quad_max_level", "8", "maximum refinement level (2^level sub-intervals)"),
          num("ladder_slack", "1e-4", "relative slack for the bound ordering checks")};
}

std::vector<KeySpec> evolution_keys() {
  return {num("ev_dt", "0.05", "initial step of the time-dependent integrator (ns)"),
          num("ev_tolerance", "1e-8", "step-halving tolerance"),
          num("ev_dt_floor", "1e-5", "smallest step before giving up"),
          text("stepper", "fourth", "integrator order", {"midpoint", "fourth"})};
}

const std::string kHubbardStates =
    "[(1,both),(2,both),(3,both),(4,both)], [(1,both),(2,both),(4,both),(5,both)], "
    "[(1,both),(3,both),(5,both),(7,both)], [(1,both),(3,both),(4,both),(6,both)]";

std::vector<ScenarioInfo> build_registry() {
  std::vector<ScenarioInfo> reg;
  auto add = [&](std::string id, std::string summary, std::vector<std::vector<KeySpec>> groups) {
    ScenarioInfo info{std::move(id), std::move(summary), shared_keys()};
    for (auto& g : groups) info.keys.insert(info.keys.end(), g.begin(), g.end());
    reg.push_back(std::move(info));
  };
  const std::vector<std::string> models = {"disorder", "imperfection", "both"};

  add("fig2_longtime", "1D QIMF long-time error and bound ladder",
      {{integer("n_sites", "10", "chain length")},
       qimf_keys("0.01", "0.01"),
       {list("noise_models", "both", "noise channels to switch on", models),
        list("states", "zero, plus", "initial states: zero, plus, haar:k, product:<0+1->"),
        num("t_final", "6", "final time"),
        integer("intervals", "60", "grid intervals on [0, t_final]"),
        text("trajectory", "ideal", "trajectory used inside the bounds", {"ideal", "noisy"}),
        num("crossover_rel_tol", "0.05", "tolerance of the crossover estimate"),
        list("entropy_pairs", "1-2, 1-3, 1-4, 1-5", "two-qubit subsystems (1-based)")},
       quadrature_keys()});
  add("fig2_segment", "1D QIMF one-segment errors with two-qubit entropies",
      {{integer("n_sites", "10", "chain length")},
       qimf_keys("0.01", "0.01"),
       {list("noise_models", "both", "noise channels to switch on", models),
        list("states", "zero, plus, haar:1, haar:2", "initial states"),
        num("t_final", "6", "final time"),
        num("segment_dt", "0.1", "segment length"),
        text("trajectory", "ideal", "trajectory used inside the bounds", {"ideal", "noisy"}),
        list("entropy_pairs", "1-2, 1-3, 1-4, 1-5", "two-qubit subsystems (1-based)")},
       quadrature_keys()});
  add("fig3_hubbard_segment", "Fermi-Hubbard chain one-segment errors in the half-filled sector",
      {{integer("n_sites", "8", "lattice sites L"),
        num("coulomb_v", "0.5", "on-site repulsion"),
        num("hopping", "1", "hopping amplitude"),
        num("delta", "0.01", "Coulomb perturbation strength"),
        text("boundary", "periodic", "chain boundary", {"open", "periodic"}),
        list("states", kHubbardStates, "occupation lists, 1-based sites"),
        num("t_final", "10", "final time"),
        num("segment_dt", "0.1", "segment length"),
        integer("entropy_site", "1", "first site j of the (j, j+m) pairs"),
        list("entropy_offsets", "1, 2, 3, 4", "offsets m")},
       quadrature_keys()});
  add("fig4_crossterms", "Hermitian cross-term contributions at a fixed time",
      {{integer("n_sites", "10", "chain length")},
       qimf_keys("0.01", "0.01"),
       {list("states", "zero, plus", "initial states"),
        num("t_eval", "6", "evaluation time"),
        num("bin_width", "0.1", "histogram bin width"),
        num("near_zero", "0.1", "threshold for |value| counted as near zero")}});
  add("fig5_control_sweep", "single-qubit RCP gate error against purified Gibbs entropy",
      {{boolean("angular", "true", "convert MHz/kHz to angular frequencies"),
        text("pulse_table", "", "pulse table path; empty means the bundled table"),
        list("pulses", "X_pi, X_pi/2, X_2pi", "pulse labels"),
        integer("lattice_rows", "3", "lattice rows"),
        integer("lattice_cols", "4", "lattice columns"),
        integer("target_row", "1", "target row (0-based)"),
        integer("target_col", "1", "target column (0-based)"),
        num("delta_ez_mhz", "200", "Zeeman splitting difference"),
        num("j_khz", "100", "exchange during the gate"),
        num("delta_khz", "50", "spectator detuning"),
        num("epsilon", "0.001", "relative amplitude error"),
        integer("n_b1", "5", "purifying qubits"),
        integer("n_b2", "2", "idle qubits"),
        list("inverse_temperatures", "", "1/T values; empty means 0.008, 0.016, ..., 0.48"),
        boolean("error_distance", "true", "also emit interaction-frame error curves"),
        integer("distance_intervals", "36", "grid intervals for the error curves")},
       evolution_keys()});
  add("fig6_disorder_vs_imperfection", "disorder ensemble trace distance and segment contributions",
      {{integer("n_sites", "8", "chain length")},
       qimf_keys("0.01", "0.01"),
       {list("states", "zero, plus", "initial states"),
        num("t_final", "6", "last tested time"),
        integer("n_times", "12", "number of tested times"),
        integer("samples", "200", "disorder realizations"),
        integer("bootstrap", "200", "bootstrap resamples for the standard error"),
        num("segment_dt", "0.1", "segment length of the contributions")},
       quadrature_keys()});
  add("fig7_hubbard_longtime", "Fermi-Hubbard chain and 2x4 ladder one-segment errors, long times",
      {{integer("n_sites", "8", "lattice sites L"),
        list("lattices", "chain, ladder", "geometries", {"chain", "ladder"}),
        integer("ladder_rows", "2", "ladder rows"),
        num("coulomb_v", "0.5", "on-site repulsion"),
        num("hopping", "1", "hopping amplitude"),
        num("delta", "0.01", "Coulomb perturbation strength"),
        text("boundary", "periodic", "boundary for both geometries", {"open", "periodic"}),
        text("state", "[(1,both),(3,both),(5,both),(7,both)]", "occupation list, 1-based"),
        num("t_final", "30", "final time"),
        num("segment_dt", "0.1", "segment length"),
        integer("entropy_site", "1", "first site j of the (j, j+m) pairs"),
        list("entropy_offsets", "1, 2, 3, 4", "offsets m")},
       quadrature_keys()});
  add("supp_qimf2d", "2D QIMF long-time and one-segment errors",
      {{integer("rows", "4", "lattice rows"), integer("cols", "3", "lattice columns")},
       qimf_keys("0.001", "0.001"),
       {list("noise_models", "disorder, imperfection, both", "noise channels", models),
        list("states", "zero, plus", "initial states"),
        num("t_final", "6", "final time"),
        integer("intervals", "60", "grid intervals; the segment length is t_final/intervals"),
        text("trajectory", "ideal", "trajectory used inside the bounds", {"ideal", "noisy"}),
        num("crossover_rel_tol", "0.05", "tolerance of the crossover estimate"),
        list("entropy_pairs", "1-2, 1-3, 1-4, 1-5", "two-qubit subsystems (1-based)")},
       quadrature_keys()});
  add("supp_twoqubit", "two-qubit exchange gate error against purified Gibbs entropy",
      {{boolean("angular", "true", "convert MHz/kHz to angular frequencies"),
        list("gate_times_ns", "25, 50, 75, 100", "gate durations"),
        integer("lattice_rows", "3", "lattice rows"),
        integer("lattice_cols", "4", "lattice columns"),
        integer("target_row", "1", "row of both targets (0-based)"),
        integer("target_col", "1", "column of the first target; the second is to its right"),
        num("j_gate_mhz", "5", "exchange for the gate (5 MHz cyclic = 10 pi MHz angular)"),
        num("delta_khz", "100", "detuning on every qubit"),
        num("j_res_khz", "100", "residual exchange to spectators"),
        integer("n_b1", "8", "purifying qubits"),
        integer("n_b2", "0", "idle qubits"),
        integer("entropy_qubits", "2", "entropy is reported on the first k qubits"),
        list("inverse_temperatures", "", "1/T values; empty means 0.008, 0.016, ..., 0.48")},
       evolution_keys()});
  add("lemma_certification", "random checks of |<A>| <= Tr(A)/d + Delta",
      {{integer("trials", "1000", "number of random trials"),
        integer("max_qubits", "5", "largest register")}});
  return reg;
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

bool valid_key_name(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
           c == '_';
  });
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return end == s.c_str() + s.size();
}

// Split on commas that are not nested inside brackets or parentheses.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

// Returns an empty string when the value fits the key, else the problem.
std::string check_value(const KeySpec& spec, const std::string& v) {
  double d;
  std::int64_t i;
  switch (spec.kind) {
    case KeyKind::Number:
      if (!parse_double(v, d)) return fmt::format("'{}' expects a number, got '{}'", spec.name, v);
      break;
    case KeyKind::Integer:
      if (!parse_int(v, i)) return fmt::format("'{}' expects an integer, got '{}'", spec.name, v);
      break;
    case KeyKind::Boolean:
      if (v != "true" && v != "false") {
        return fmt::format("'{}' expects true or false, got '{}'", spec.name, v);
      }
      break;
    case KeyKind::Text:
      if (!spec.choices.empty() &&
          std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
        return fmt::format("'{}' must be one of {}, got '{}'", spec.name,
                           fmt::join(spec.choices, "|"), v);
      }
      break;
    case KeyKind::List:
      for (const std::string& item : split_list(v)) {
        if (item.empty()) return fmt::format("'{}' has an empty list item", spec.name);
        if (!spec.choices.empty() &&
            std::find(spec.choices.begin(), spec.choices.end(), item) == spec.choices.end()) {
          return fmt::format("'{}' items must be among {}, got '{}'", spec.name,
                             fmt::join(spec.choices, "|"), item);
        }
      }
      break;
  }
  return {};
}

const KeySpec* find_key(const ScenarioInfo& info, const std::string& key) {
  for (const KeySpec& k : info.keys) {
    if (k.name == key) return &k;
  }
  return nullptr;
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_registry() {
  static const std::vector<ScenarioInfo> reg = build_registry();
  return reg;
}

const ScenarioInfo& scenario_info(const std::string& id) {
  for (const ScenarioInfo& s : scenario_registry()) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("unknown scenario '" + id + "'");
}

namespace {
std::string join_issues(const std::vector<std::string>& issues) {
  std::string msg = "invalid config:";
  for (const std::string& s : issues) msg += "\n  " + s;
  return msg;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ScenarioConfig ScenarioConfig::parse(std::string_view text, const std::string& origin) {
  std::vector<std::string> issues;
  struct Entry {
    std::string key, value;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      issues.push_back(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
      continue;
    }
    Entry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line_no};
    if (!valid_key_name(e.key)) {
      issues.push_back(fmt::format("{}:{}: bad key name '{}'", origin, line_no, e.key));
      continue;
    }
    entries.push_back(std::move(e));
  }

  ScenarioConfig cfg;
  std::size_t scenario_line = 0;
  for (const Entry& e : entries) {
    if (e.key != "scenario") continue;
    if (scenario_line != 0) {
      issues.push_back(fmt::format("{}:{}: duplicate key 'scenario' (first set on line {})", origin,
                                   e.line, scenario_line));
      continue;
    }
    scenario_line = e.line;
    cfg.scenario_ = e.value;
  }
  const ScenarioInfo* info = nullptr;
  if (scenario_line == 0) {
    issues.push_back(fmt::format("{}: missing required key 'scenario'", origin));
  } else {
    try {
      info = &scenario_info(cfg.scenario_);
    } catch (const std::out_of_range&) {
      issues.push_back(
          fmt::format("{}:{}: unknown scenario '{}'", origin, scenario_line, cfg.scenario_));
    }
  }
  if (!info) throw ConfigError(issues);

  for (const KeySpec& k : info->keys) cfg.values_[k.name] = k.default_value;
  std::map<std::string, std::size_t> seen;
  for (const Entry& e : entries) {
    if (e.key == "scenario") continue;
    const KeySpec* spec = find_key(*info, e.key);
    if (!spec) {
      issues.push_back(fmt::format("{}:{}: unknown key '{}' for scenario {}", origin, e.line, e.key,
                                   cfg.scenario_));
      continue;
    }
    if (auto it = seen.find(e.key); it != seen.end()) {
      issues.push_back(fmt::format("{}:{}: duplicate key '{}' (first set on line {})", origin,
                                   e.line, e.key, it->second));
      continue;
    }
    seen[e.key] = e.line;
    if (std::string p = check_value(*spec, e.value); !p.empty()) {
      issues.push_back(fmt::format("{}:{}: {}", origin, e.line, p));
      continue;
    }
    cfg.values_[e.key] = e.value;
  }
  if (!issues.empty()) throw ConfigError(issues);
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open file"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

ScenarioConfig ScenarioConfig::defaults(const std::string& scenario) {
  return parse("scenario = " + scenario + "\n", "<defaults>");
}

ScenarioConfig ScenarioConfig::with(const std::string& key, const std::string& value) const {
  const ScenarioInfo& info = scenario_info(scenario_);
  const KeySpec* spec = find_key(info, key);
  if (!spec) throw ConfigError({fmt::format("<override>: unknown key '{}' for scenario {}", key, scenario_)});
  if (std::string p = check_value(*spec, value); !p.empty()) throw ConfigError({"<override>: " + p});
  ScenarioConfig out = *this;
  out.values_[key] = value;
  return out;
}

const std::string& ScenarioConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("config has no key '" + key + "'");
  return it->second;
}

double ScenarioConfig::number(const std::string& key) const {
  double d;
  if (!parse_double(get(key), d)) throw std::invalid_argument("'" + key + "' is not a number");
  return d;
}

std::int64_t ScenarioConfig::integer(const std::string& key) const {
  std::int64_t i;
  if (!parse_int(get(key), i)) throw std::invalid_argument("'" + key + "' is not an integer");
  return i;
}

bool ScenarioConfig::flag(const std::string& key) const { return get(key) == "true"; }

std::vector<std::string> ScenarioConfig::list(const std::string& key) const {
  return split_list(get(key));
}

std::vector<double> ScenarioConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : list(key)) {
    double d;
    if (!parse_double(item, d)) throw ConfigError({fmt::format("'{}' item '{}' is not a number", key, item)});
    out.push_back(d);
  }
  return out;
}

std::string output_root() {
  const char* env = std::getenv("RESILIENCE_OUT");
  return (env && *env) ? std::string(env) : std::string("out");
}

std::string ScenarioConfig::output_dir() const {
  const std::string& d = get("output_dir");
  return d.empty() ? output_root() + "/" + scenario_ : d;
}

std::string ScenarioConfig::canonical() const {
  std::string out = "scenario = " + scenario_ + "\n";
  for (const auto& [k, v] : values_) {
    if (k == "output_dir") continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

std::string ScenarioConfig::hash() const { return sha256_hex(canonical()); }

}  // namespace resilience
