#include "resilience/operator_sum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace resilience {

OperatorSum::OperatorSum(std::size_t n_sites) : n_sites_(n_sites) {
  if (n_sites == 0 || n_sites > kMaxSites) {
    throw std::invalid_argument("OperatorSum: n_sites must be in [1, 64]");
  }
}

OperatorSum::OperatorSum(std::size_t n_sites, std::vector<Term> terms) : OperatorSum(n_sites) {
  for (const Term& t : terms) check_site(t.pauli);
  terms_ = std::move(terms);
}

void OperatorSum::check_site(const PauliString& p) const {
  if (!p.is_identity() && p.max_site() >= n_sites_) {
    throw std::invalid_argument(
        fmt::format("OperatorSum: site {} out of range for {} sites", p.max_site(), n_sites_));
  }
}

OperatorSum& OperatorSum::add(cplx coefficient, const PauliString& p, const Envelope& e) {
  check_site(p);
  terms_.push_back({coefficient, e, p});
  return *this;
}

OperatorSum OperatorSum::simplified(double tol) const {
  std::map<std::pair<PauliString, std::string>, std::size_t> index;
  std::vector<Term> merged;
  for (const Term& t : terms_) {
    auto key = std::make_pair(t.pauli, envelope_key(t.envelope));
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(std::move(key), merged.size());
      merged.push_back(t);
    } else {
      merged[it->second].coefficient += t.coefficient;
    }
  }
  std::vector<std::tuple<PauliString, std::string, std::size_t>> order;
  for (const auto& [key, pos] : index) order.emplace_back(key.first, key.second, pos);
  std::sort(order.begin(), order.end());
  OperatorSum out(n_sites_);
  for (const auto& [p, k, pos] : order) {
    if (std::abs(merged[pos].coefficient) > tol) out.terms_.push_back(merged[pos]);
  }
  return out;
}

bool OperatorSum::is_hermitian(double tol) const {
  for (const Term& t : simplified().terms_) {
    if (std::abs(t.coefficient.imag()) > tol) return false;
  }
  return true;
}

bool OperatorSum::is_time_independent() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const Term& t) { return t.envelope.is_constant(); });
}

double OperatorSum::max_time() const {
  double tmax = std::numeric_limits<double>::infinity();
  for (const Term& t : terms_) tmax = std::min(tmax, t.envelope.max_time());
  return tmax;
}

OperatorSum OperatorSum::at(double t) const {
  OperatorSum out(n_sites_);
  out.terms_.reserve(terms_.size());
  for (const Term& term : terms_) {
    const double e = term.envelope.is_constant() ? 1.0 : term.envelope(t);
    out.terms_.push_back({term.coefficient * e, Envelope{}, term.pauli});
  }
  return out;
}

OperatorSum OperatorSum::adjoint() const {
  OperatorSum out = *this;
  for (Term& t : out.terms_) t.coefficient = std::conj(t.coefficient);
  return out;
}

OperatorSum OperatorSum::operator+(const OperatorSum& o) const {
  if (o.n_sites_ != n_sites_) throw std::invalid_argument("OperatorSum: site count mismatch");
  OperatorSum out = *this;
  out.terms_.insert(out.terms_.end(), o.terms_.begin(), o.terms_.end());
  return out;
}

OperatorSum OperatorSum::operator-(const OperatorSum& o) const { return *this + o * cplx(-1.0); }

OperatorSum OperatorSum::operator*(const OperatorSum& o) const {
  if (o.n_sites_ != n_sites_) throw std::invalid_argument("OperatorSum: site count mismatch");
  OperatorSum out(n_sites_);
  out.terms_.reserve(terms_.size() * o.terms_.size());
  for (const Term& a : terms_) {
    for (const Term& b : o.terms_) {
      const PauliProduct pr = pauli_mul(a.pauli, b.pauli);
      out.terms_.push_back({a.coefficient * b.coefficient * pr.phase, a.envelope * b.envelope,
                            pr.product});
    }
  }
  return out.simplified();
}

OperatorSum OperatorSum::operator*(cplx s) const {
  OperatorSum out = *this;
  for (Term& t : out.terms_) t.coefficient *= s;
  return out;
}

OperatorSum operator*(cplx s, const OperatorSum& op) { return op * s; }

cplx OperatorSum::identity_coefficient(double t) const {
  cplx c = 0.0;
  for (const Term& term : terms_) {
    if (term.pauli.is_identity()) {
      c += term.coefficient * (term.envelope.is_constant() ? 1.0 : term.envelope(t));
    }
  }
  return c;
}

std::string OperatorSum::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (const Term& t : terms_) {
    if (!out.empty()) out += " + ";
    if (t.coefficient.imag() == 0.0) {
      out += fmt::format("{:.17g}", t.coefficient.real());
    } else {
      out += fmt::format("({:.17g}{:+.17g}i)", t.coefficient.real(), t.coefficient.imag());
    }
    out += " * " + t.pauli.str();
    if (!t.envelope.is_constant()) out += " " + t.envelope.str();
  }
  return out;
}

CMatrix to_dense(const OperatorSum& op, double t, std::size_t max_sites) {
  if (op.n_sites() > max_sites) {
    throw std::length_error(
        fmt::format("to_dense: {} sites exceeds the dense cap of {}", op.n_sites(), max_sites));
  }
  const std::uint64_t dim = std::uint64_t{1} << op.n_sites();
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const Term& term : op.terms()) {
    const cplx c = term.coefficient * (term.envelope.is_constant() ? 1.0 : term.envelope(t));
    if (c == 0.0) continue;
    for (std::uint64_t b = 0; b < dim; ++b) {
      m(static_cast<Eigen::Index>(term.pauli.target(b)), static_cast<Eigen::Index>(b)) +=
          c * term.pauli.phase(b);
    }
  }
  return m;
}

CVector apply(const OperatorSum& op, const CVector& psi, double t) {
  const std::uint64_t dim = std::uint64_t{1} << op.n_sites();
  if (static_cast<std::uint64_t>(psi.size()) != dim) {
    throw std::invalid_argument("apply: state dimension does not match operator");
  }
  CVector out = CVector::Zero(psi.size());
  for (const Term& term : op.terms()) {
    const cplx c = term.coefficient * (term.envelope.is_constant() ? 1.0 : term.envelope(t));
    if (c == 0.0) continue;
    const cplx base = c * term.pauli.phase(0);
    const std::uint64_t x = term.pauli.x_bits(), z = term.pauli.z_bits();
    for (std::uint64_t b = 0; b < dim; ++b) {
      const cplx v = base * psi(static_cast<Eigen::Index>(b));
      out(static_cast<Eigen::Index>(b ^ x)) += (std::popcount(b & z) & 1) ? -v : v;
    }
  }
  return out;
}

cplx expectation(const OperatorSum& op, const CVector& psi, double t) {
  return psi.dot(resilience::apply(op, psi, t));
}

double frobenius_norm(const OperatorSum& op, double t) {
  double s = 0.0;
  const OperatorSum ev = op.at(t).simplified();
  for (const Term& term : ev.terms()) s += std::norm(term.coefficient);
  return std::sqrt(s);
}

OperatorNorms operator_norms(const OperatorSum& op, double t, std::size_t max_sites) {
  // All strings built from a single axis family share an eigenbasis, so the
  // spectrum is read off sign patterns without forming the matrix.
  const OperatorSum ev = op.at(t).simplified();
  bool z_only = true, x_only = true;
  for (const Term& term : ev.terms()) {
    if (term.pauli.x_bits() != 0) z_only = false;
    if (term.pauli.z_bits() != 0) x_only = false;
  }
  if ((z_only || x_only) && op.n_sites() <= 24) {
    const std::uint64_t dim = std::uint64_t{1} << op.n_sites();
    double top = 0.0;
    for (std::uint64_t b = 0; b < dim; ++b) {
      cplx v = 0.0;
      for (const Term& term : ev.terms()) {
        const std::uint64_t m = z_only ? term.pauli.z_bits() : term.pauli.x_bits();
        v += (std::popcount(b & m) & 1) ? -term.coefficient : term.coefficient;
      }
      top = std::max(top, std::abs(v));
    }
    return {top, frobenius_norm(ev)};
  }
  const CMatrix m = to_dense(op, t, max_sites);
  const double d = static_cast<double>(m.rows());
  return {spectral_norm(m), std::sqrt(m.squaredNorm() / d)};
}

std::uint64_t support_bits(const OperatorSum& op) {
  std::uint64_t s = 0;
  for (const Term& t : op.terms()) {
    if (t.coefficient != 0.0) s |= t.pauli.support_bits();
  }
  return s;
}

std::vector<std::size_t> support(const OperatorSum& op) {
  return PauliString(support_bits(op), 0).support();
}

std::vector<std::vector<std::size_t>> term_supports(const OperatorSum& op) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(op.size());
  for (const Term& t : op.terms()) out.push_back(t.pauli.support());
  return out;
}

OperatorSum hermitian_square(const OperatorSum& op) {
  if (!op.is_time_independent()) {
    throw std::invalid_argument("hermitian_square: evaluate envelopes first");
  }
  const OperatorSum h = op.simplified();
  std::map<PauliString, cplx> acc;
  for (const Term& a : h.terms()) {
    for (const Term& b : h.terms()) {
      const PauliProduct pr = pauli_mul(a.pauli, b.pauli);
      acc[pr.product] += std::conj(a.coefficient) * b.coefficient * pr.phase;
    }
  }
  OperatorSum out(op.n_sites());
  for (const auto& [p, c] : acc) {
    if (c != 0.0) out.add(c, p);
  }
  return out;
}

OperatorSum restrict_to(const OperatorSum& op, std::uint64_t mask) {
  const std::size_t k = static_cast<std::size_t>(std::popcount(mask));
  if (k == 0) throw std::invalid_argument("restrict_to: empty site mask");
  OperatorSum out(k);
  for (const Term& t : op.terms()) {
    if (t.pauli.support_bits() & ~mask) {
      throw std::invalid_argument("restrict_to: term supported outside the mask");
    }
    out.add(t.coefficient,
            PauliString(extract_bits(t.pauli.x_bits(), mask), extract_bits(t.pauli.z_bits(), mask)),
            t.envelope);
  }
  return out;
}

OperatorSum relabel(const OperatorSum& op, const std::vector<std::size_t>& site_map,
                    std::size_t n_sites) {
  if (site_map.size() < op.n_sites()) throw std::invalid_argument("relabel: map too short");
  OperatorSum out(n_sites);
  for (const Term& t : op.terms()) {
    std::uint64_t x = 0, z = 0;
    for (const auto& f : t.pauli.factors()) {
      const std::uint64_t bit = std::uint64_t{1} << site_map[f.site];
      if (f.axis != Axis::Z) x |= bit;
      if (f.axis != Axis::X) z |= bit;
    }
    out.add(t.coefficient, PauliString(x, z), t.envelope);
  }
  return out;
}

}  // namespace resilience
