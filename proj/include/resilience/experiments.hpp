#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "resilience/dynamics.hpp"
#include "resilience/linalg.hpp"
#include "resilience/operator_sum.hpp"

namespace resilience {

// ---- configuration ----------------------------------------------------------

enum class KeyKind { Number, Integer, Boolean, Text, List };

struct KeySpec {
  std::string name;
  KeyKind kind;
  std::string default_value;
  std::string help;
  std::vector<std::string> choices;  // allowed values (or list items) when non-empty
};

struct ScenarioInfo {
  std::string id;
  std::string summary;
  std::vector<KeySpec> keys;  // includes the shared keys
};

const std::vector<ScenarioInfo>& scenario_registry();
const ScenarioInfo& scenario_info(const std::string& id);  // throws std::out_of_range

// Every problem found while reading a config, as "origin:line: message".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

// Flat "key = value" file; see docs/config_format.md. Keys not set in the
// file take the scenario defaults.
class ScenarioConfig {
 public:
  static ScenarioConfig parse(std::string_view text, const std::string& origin = "<config>");
  static ScenarioConfig load(const std::string& path);
  static ScenarioConfig defaults(const std::string& scenario);

  // Copy with one key replaced; validated like a file entry.
  ScenarioConfig with(const std::string& key, const std::string& value) const;

  const std::string& scenario() const { return scenario_; }
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  // Resolved output directory: output_dir if set, else $RESILIENCE_OUT/<scenario>.
  std::string output_dir() const;
  // Sorted "key = value" lines for every key except output_dir.
  std::string canonical() const;
  std::string hash() const;  // sha256 of canonical()

 private:
  std::string scenario_;
  std::map<std::string, std::string> values_;
};

// Output root used when a config leaves output_dir empty.
std::string output_root();

// ---- runs -------------------------------------------------------------------

struct OutputRecord {
  std::string file;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::string scenario;
  std::string config_hash;
  std::string code_version;
  std::string rng_identity;
  double wall_clock_seconds = 0.0;
  std::string output_dir;
  std::vector<OutputRecord> outputs;
  std::size_t violation_count = 0;

  nlohmann::json to_json() const;
};

struct RunOptions {
  unsigned threads = 1;  // Monte Carlo realizations only
  bool write_files = true;
};

struct ScenarioResult {
  RunManifest manifest;
  std::vector<std::string> violations;  // invariant failures; nonzero exit in the CLI
  nlohmann::json summary;               // headline numbers and scenario checks
};

ScenarioResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});
// Drops the per-process cache of spectral decompositions.
void clear_evolver_cache();

// ||(U0(dt) - U(dt)) psi_t|| with U0 = exp(-i h0 dt), U = exp(-i (h0 + h_pert) dt).
double one_segment_error(const OperatorSum& h0, const OperatorSum& h_pert, const CVector& psi_t,
                         double dt);
double one_segment_error(const SpectralEvolver& ideal, const SpectralEvolver& noisy,
                         const CVector& psi_t, double dt);
// Sector matrices of h0 and h0 + h_pert.
double one_segment_error(const RSparse& ideal, const RSparse& noisy, const CVector& psi_t, double dt);

// ---- lemma certification ----------------------------------------------------

struct LemmaTrial {
  std::size_t index;
  std::size_t n_qubits;
  std::size_t n_terms;
  std::string state_kind;
  double expectation;  // |<A>|, from the dense matrix
  double trace_term;   // Tr(A)/d
  double delta;
  bool violated;
};

struct LemmaCertification {
  std::vector<LemmaTrial> trials;
  std::size_t violations = 0;
};

// Trial k draws from Rng(seed, k), so results do not depend on `threads`.
LemmaTrial lemma_trial(std::uint64_t seed, std::size_t index, std::size_t max_qubits = 5);
LemmaCertification certify_lemma(std::size_t trials, std::uint64_t seed, unsigned threads = 1,
                                 std::size_t max_qubits = 5);

// ---- statistics used by scenario checks -------------------------------------

double pearson(const std::vector<double>& a, const std::vector<double>& b);
// Pearson correlation of average ranks (ties share their mean rank).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// ---- manifest helpers -------------------------------------------------------

std::string sha256_hex(std::string_view data);

// Collects files written for one run and their checksums.
class OutputSink {
 public:
  OutputSink(std::string dir, bool enabled);
  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& j);
  const std::vector<OutputRecord>& records() const { return records_; }
  const std::string& dir() const { return dir_; }
  // Content of a file written in this run (kept in memory).
  const std::string& content(const std::string& name) const;

 private:
  std::string dir_;
  bool enabled_;
  std::vector<OutputRecord> records_;
  std::map<std::string, std::string> contents_;
};

}  // namespace resilience
