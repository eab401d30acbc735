#include "resilience/detection.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace resilience {

std::vector<PauliString> structure_terms(const OperatorSum& op) {
  std::set<PauliString> seen;
  for (const Term& t : op.terms()) {
    if (!t.pauli.is_identity() && t.coefficient != 0.0) seen.insert(t.pauli);
  }
  return {seen.begin(), seen.end()};
}

std::vector<CrossTermRecord> cross_term_expectations(const std::vector<PauliString>& terms,
                                                     const CVector& psi) {
  std::vector<CrossTermRecord> out;
  if (terms.empty()) return out;
  std::size_t n_sites = 1;
  for (const auto& p : terms) {
    if (!p.is_identity()) n_sites = std::max(n_sites, p.max_site() + 1);
  }
  if ((Eigen::Index{1} << n_sites) > psi.size()) {
    throw std::invalid_argument("cross_term_expectations: term outside the state register");
  }
  const std::size_t reg = static_cast<std::size_t>(std::log2(static_cast<double>(psi.size())));
  for (std::size_t j = 0; j < terms.size(); ++j) {
    for (std::size_t jp = j + 1; jp < terms.size(); ++jp) {
      const PauliProduct pr = pauli_mul(terms[j], terms[jp]);
      if (pr.product.is_identity()) continue;
      OperatorSum prod(reg);
      prod.add(pr.phase, pr.product);
      // P_j P_j' + (P_j P_j')^dagger, and both strings have unit spectral norm.
      const double value = 2.0 * expectation(prod, psi).real();
      out.push_back({j, jp, terms[j].str() + "*" + terms[jp].str(), value});
    }
  }
  return out;
}

std::size_t Histogram::total() const {
  std::size_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

Histogram histogram(const std::vector<CrossTermRecord>& records, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("histogram: bin width must be positive");
  const long kmin = static_cast<long>(std::floor(-2.0 / width + 0.5));
  const long kmax = static_cast<long>(std::floor(2.0 / width + 0.5));
  Histogram h{width, {}, std::vector<std::size_t>(static_cast<std::size_t>(kmax - kmin + 1), 0)};
  for (long k = kmin; k <= kmax; ++k) h.centers.push_back(static_cast<double>(k) * width);
  for (const auto& r : records) {
    long k = static_cast<long>(std::floor(r.value / width + 0.5));
    k = std::clamp(k, kmin, kmax);
    ++h.counts[static_cast<std::size_t>(k - kmin)];
  }
  return h;
}

double mass_outside(const std::vector<CrossTermRecord>& records, double threshold) {
  if (records.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& r : records) n += std::abs(r.value) > threshold;
  return static_cast<double>(n) / static_cast<double>(records.size());
}

CsvTable cross_terms_csv(const std::vector<CrossTermRecord>& records, const std::string& caption) {
  CsvTable t;
  t.comments.push_back(caption);
  t.columns = {"j", "j_prime", "label", "value"};
  for (const auto& r : records) {
    t.add_row({std::to_string(r.j), std::to_string(r.jp), r.label, format_real(r.value)});
  }
  return t;
}

CsvTable histogram_csv(const Histogram& h, const std::string& caption) {
  CsvTable t;
  t.comments.push_back(caption);
  t.columns = {"bin_center", "bin_low", "bin_high", "count"};
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    t.add_row({format_real(h.centers[i]), format_real(h.centers[i] - 0.5 * h.width),
               format_real(h.centers[i] + 0.5 * h.width), std::to_string(h.counts[i])});
  }
  return t;
}

}  // namespace resilience
