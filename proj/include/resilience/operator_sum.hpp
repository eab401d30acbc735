#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "resilience/envelope.hpp"
#include "resilience/linalg.hpp"
#include "resilience/pauli.hpp"

namespace resilience {

constexpr std::size_t kDenseCap = 14;

struct Term {
  cplx coefficient;
  Envelope envelope;
  PauliString pauli;
};

class OperatorSum {
 public:
  explicit OperatorSum(std::size_t n_sites);
  OperatorSum(std::size_t n_sites, std::vector<Term> terms);

  OperatorSum& add(cplx coefficient, const PauliString& p, const Envelope& e = {});
  OperatorSum& add(const Term& t) { return add(t.coefficient, t.pauli, t.envelope); }

  std::size_t n_sites() const { return n_sites_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  // Merge terms sharing (string, envelope), drop coefficients with |c| <= tol,
  // and sort canonically.
  OperatorSum simplified(double tol = 0.0) const;
  bool is_hermitian(double tol = 1e-12) const;
  bool is_time_independent() const;
  double max_time() const;

  // Evaluate envelopes at t, giving a time-independent operator.
  OperatorSum at(double t) const;
  OperatorSum adjoint() const;

  OperatorSum operator+(const OperatorSum& o) const;
  OperatorSum operator-(const OperatorSum& o) const;
  OperatorSum operator*(const OperatorSum& o) const;
  OperatorSum operator*(cplx s) const;

  // Coefficient of the identity string at time t.
  cplx identity_coefficient(double t = 0.0) const;

  std::string str() const;

 private:
  void check_site(const PauliString& p) const;

  std::size_t n_sites_;
  std::vector<Term> terms_;
};

OperatorSum operator*(cplx s, const OperatorSum& op);

CMatrix to_dense(const OperatorSum& op, double t = 0.0, std::size_t max_sites = kDenseCap);
// Sparse action on a full-space vector.
CVector apply(const OperatorSum& op, const CVector& psi, double t = 0.0);
// <psi| op |psi>
cplx expectation(const OperatorSum& op, const CVector& psi, double t = 0.0);

struct OperatorNorms {
  double spectral;
  double frobenius_normalized;
};

OperatorNorms operator_norms(const OperatorSum& op, double t = 0.0,
                             std::size_t max_sites = kDenseCap);
// sqrt(Tr(X^dagger X)/d) computed from merged Pauli coefficients; no dense cap.
double frobenius_norm(const OperatorSum& op, double t = 0.0);

std::vector<std::size_t> support(const OperatorSum& op);
std::uint64_t support_bits(const OperatorSum& op);
std::vector<std::vector<std::size_t>> term_supports(const OperatorSum& op);

// X^dagger X expanded term by term with pauli_mul and merged. Requires a
// time-independent operator.
OperatorSum hermitian_square(const OperatorSum& op);

// The operator restricted to the sites in `mask` (relabelled 0..k-1 in
// increasing order). Every term must be supported inside the mask.
OperatorSum restrict_to(const OperatorSum& op, std::uint64_t mask);
// Relabel site i -> site_map[i] on a register of n_sites.
OperatorSum relabel(const OperatorSum& op, const std::vector<std::size_t>& site_map,
                    std::size_t n_sites);

// Text parsing; see docs/operator_grammar.md.
struct ParseContext {
  std::map<std::string, PulseParams> pulses;
};
OperatorSum parse_operator(std::string_view text, std::size_t n_sites,
                           const ParseContext& ctx = {});

}  // namespace resilience
