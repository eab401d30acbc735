#pragma once

#include <string>
#include <vector>

#include "resilience/linalg.hpp"
#include "resilience/operator_sum.hpp"
#include "resilience/report.hpp"

namespace resilience {

struct CrossTermRecord {
  std::size_t j;
  std::size_t jp;
  std::string label;
  double value;  // <P_j P_j' + h.c.> / (||P_j|| ||P_j'||), in [-2, 2]
};

// Distinct Pauli strings of an operator with coefficients dropped, in canonical order.
std::vector<PauliString> structure_terms(const OperatorSum& op);

std::vector<CrossTermRecord> cross_term_expectations(const std::vector<PauliString>& terms,
                                                     const CVector& psi);

struct Histogram {
  double width;
  std::vector<double> centers;
  std::vector<std::size_t> counts;
  std::size_t total() const;
};

// Bins of the given width centred on multiples of it, covering [-2, 2].
Histogram histogram(const std::vector<CrossTermRecord>& records, double width);
// Fraction of records with |value| > threshold.
double mass_outside(const std::vector<CrossTermRecord>& records, double threshold);

CsvTable cross_terms_csv(const std::vector<CrossTermRecord>& records, const std::string& caption);
CsvTable histogram_csv(const Histogram& h, const std::string& caption);

}  // namespace resilience
