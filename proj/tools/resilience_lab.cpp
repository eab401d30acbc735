#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "resilience/experiments.hpp"

using namespace resilience;

namespace {

constexpr int kViolations = 1;
constexpr int kBadConfig = 2;

void print_issues(const ConfigError& e) {
  for (const auto& s : e.issues()) std::cerr << "config error: " << s << "\n";
}

int report(const ScenarioResult& r) {
  std::cout << fmt::format("scenario {}  config {}  {:.2f}s  {} outputs  -> {}\n", r.manifest.scenario,
                           r.manifest.config_hash.substr(0, 12), r.manifest.wall_clock_seconds,
                           r.manifest.outputs.size(), r.manifest.output_dir);
  std::cout << r.summary.dump(2) << "\n";
  for (const auto& v : r.violations) std::cerr << "violation: " << v << "\n";
  if (!r.violations.empty()) {
    std::cerr << r.violations.size() << " invariant violation(s)\n";
    return kViolations;
  }
  return 0;
}

const char* kind_name(KeyKind k) {
  switch (k) {
    case KeyKind::Number: return "number";
    case KeyKind::Integer: return "integer";
    case KeyKind::Boolean: return "bool";
    case KeyKind::Text: return "text";
    case KeyKind::List: return "list";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"resilience-lab: entanglement-aware error bounds for analog quantum simulation"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario config");
  std::string config_path;
  unsigned threads = 1;
  std::vector<std::string> overrides;
  bool no_write = false;
  run->add_option("config", config_path, "scenario config file")->required();
  run->add_option("--parallel-trials", threads, "threads for Monte Carlo realizations")->check(CLI::PositiveNumber);
  run->add_option("--set", overrides, "override a config key, key=value (repeatable)");
  run->add_flag("--dry-run", no_write, "compute and check without writing files");

  auto* list = app.add_subcommand("list-scenarios", "list scenario ids");

  auto* defaults = app.add_subcommand("show-defaults", "print a scenario's keys and defaults as a config");
  std::string scenario_id;
  defaults->add_option("scenario", scenario_id, "scenario id")->required();

  auto* lemma = app.add_subcommand("certify-lemma", "random trials of |<A>| <= Tr(A)/d + Delta");
  std::size_t trials = 1000, max_qubits = 5;
  std::uint64_t seed = 0;
  unsigned lemma_threads = 1;
  lemma->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
  lemma->add_option("--seed", seed, "seed");
  lemma->add_option("--max-qubits", max_qubits, "largest register")->check(CLI::Range(2, 8));
  lemma->add_option("--parallel-trials", lemma_threads, "threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig cfg = ScenarioConfig::load(config_path);
      for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError({"--set " + o + ": expected key=value"});
        auto trim = [](std::string s) {
          s.erase(0, s.find_first_not_of(" \t"));
          s.erase(s.find_last_not_of(" \t") + 1);
          return s;
        };
        cfg = cfg.with(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
      }
      RunOptions opts;
      opts.threads = threads;
      opts.write_files = !no_write;
      return report(run_scenario(cfg, opts));
    }
    if (*list) {
      for (const ScenarioInfo& s : scenario_registry()) std::cout << fmt::format("{:<32} {}\n", s.id, s.summary);
      return 0;
    }
    if (*defaults) {
      const ScenarioInfo& info = scenario_info(scenario_id);
      std::cout << "# " << info.summary << "\nscenario = " << info.id << "\n";
      for (const KeySpec& k : info.keys) {
        std::string help = fmt::format("# {} ({})", k.help, kind_name(k.kind));
        if (!k.choices.empty()) help += " one of: " + fmt::format("{}", fmt::join(k.choices, ", "));
        std::cout << help << "\n" << k.name << " = " << k.default_value << "\n";
      }
      return 0;
    }
    if (*lemma) {
      const LemmaCertification c = certify_lemma(trials, seed, lemma_threads, max_qubits);
      double worst = 0.0;
      for (const LemmaTrial& t : c.trials) {
        const double slack = t.trace_term + t.delta - t.expectation;
        if (t.index == 0 || slack < worst) worst = slack;
      }
      std::cout << fmt::format("trials {}  seed {}  violations {}  min slack {:.6e}\n", trials, seed, c.violations,
                               worst);
      for (const LemmaTrial& t : c.trials) {
        if (t.violated) {
          std::cerr << fmt::format("violation: trial {} ({} qubits, {}): {:.6e} > {:.6e} + {:.6e}\n", t.index,
                                   t.n_qubits, t.state_kind, t.expectation, t.trace_term, t.delta);
        }
      }
      return c.violations == 0 ? 0 : kViolations;
    }
  } catch (const ConfigError& e) {
    print_issues(e);
    return kBadConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
