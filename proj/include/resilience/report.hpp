#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace resilience {

std::string format_real(double v);

struct CsvTable {
  std::vector<std::string> comments;  // written as "# ..." lines
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
  void add_row(std::vector<std::string> cells);
  std::string render() const;
  void write(const std::string& path) const;
};

struct LadderViolation {
  std::size_t row;
  std::string relation;
  double lhs;
  double rhs;
};

// One row per grid point; column order is fixed by to_csv().
struct BoundReport {
  std::string scenario;
  std::string state_label;
  std::uint64_t seed = 0;
  std::vector<double> t;
  std::vector<double> exact_error;
  std::vector<double> integral_bound;
  std::vector<double> entanglement_bound;
  std::vector<double> split_bound;
  std::vector<double> frobenius_bound;
  std::vector<double> spectral_bound;
  double crossover_c = 0.0;
  std::vector<std::string> entropy_labels;
  std::vector<std::vector<double>> entropy_bits;  // [label][row]
  nlohmann::json metadata;

  static std::vector<std::string> fixed_columns();
  CsvTable to_csv(const std::string& caption) const;
  nlohmann::json sidecar() const;
  // exact <= integral <= entanglement (relative slack) and frobenius <= spectral.
  std::vector<LadderViolation> check_ladder(double slack = 1e-4) const;
};

bool within_slack(double lhs, double rhs, double slack);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace resilience
