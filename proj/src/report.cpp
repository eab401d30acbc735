#include "resilience/report.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace resilience {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  return fmt::format("{:.12e}", v);
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_real(v));
  add_row(std::move(cells));
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size()) throw std::logic_error("CsvTable: row width mismatch");
  rows.push_back(std::move(cells));
}

std::string CsvTable::render() const {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
    out += "\n";
  }
  return out;
}

void CsvTable::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << render();
}

std::vector<std::string> BoundReport::fixed_columns() {
  return {"t",
          "exact_error",
          "integral_bound",
          "entanglement_bound",
          "split_bound",
          "frobenius_bound",
          "spectral_bound",
          "crossover_c"};
}

CsvTable BoundReport::to_csv(const std::string& caption) const {
  CsvTable table;
  table.comments.push_back(caption);
  table.comments.push_back(fmt::format("scenario={} state={} seed={}", scenario, state_label, seed));
  table.columns = fixed_columns();
  for (const auto& l : entropy_labels) table.columns.push_back(l);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::vector<double> row{t[i],
                            exact_error[i],
                            integral_bound[i],
                            entanglement_bound.empty() ? NAN : entanglement_bound[i],
                            split_bound.empty() ? NAN : split_bound[i],
                            frobenius_bound[i],
                            spectral_bound[i],
                            crossover_c};
    for (const auto& e : entropy_bits) row.push_back(e[i]);
    table.add_row(row);
  }
  return table;
}

nlohmann::json BoundReport::sidecar() const {
  nlohmann::json j = metadata;
  j["scenario"] = scenario;
  j["state"] = state_label;
  j["seed"] = seed;
  j["crossover_c"] = crossover_c;
  j["columns"] = fixed_columns();
  for (const auto& l : entropy_labels) j["columns"].push_back(l);
  return j;
}

bool within_slack(double lhs, double rhs, double slack) {
  return lhs <= rhs + slack * std::abs(rhs) + 1e-12;
}

std::vector<LadderViolation> BoundReport::check_ladder(double slack) const {
  std::vector<LadderViolation> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!within_slack(exact_error[i], integral_bound[i], slack)) {
      out.push_back({i, "exact<=integral", exact_error[i], integral_bound[i]});
    }
    if (!entanglement_bound.empty() && !within_slack(integral_bound[i], entanglement_bound[i], slack)) {
      out.push_back({i, "integral<=entanglement", integral_bound[i], entanglement_bound[i]});
    }
    if (!within_slack(frobenius_bound[i], spectral_bound[i], 1e-12)) {
      out.push_back({i, "frobenius<=spectral", frobenius_bound[i], spectral_bound[i]});
    }
  }
  return out;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

}  // namespace resilience
