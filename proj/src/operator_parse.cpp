#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "resilience/operator_sum.hpp"

namespace resilience {

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::size_t n_sites, const ParseContext& ctx)
      : s_(text), n_sites_(n_sites), ctx_(ctx) {}

  OperatorSum parse() {
    OperatorSum out(n_sites_);
    skip_ws();
    if (at_end()) throw error("empty operator expression");
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') {
      sign = peek() == '-' ? -1.0 : 1.0;
      ++pos_;
    }
    parse_term(out, sign);
    while (true) {
      skip_ws();
      if (at_end()) break;
      const char c = peek();
      if (c != '+' && c != '-') throw error(fmt::format("expected '+' or '-', found '{}'", c));
      ++pos_;
      parse_term(out, c == '-' ? -1.0 : 1.0);
    }
    return out;
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::invalid_argument error(const std::string& what) const {
    return std::invalid_argument(fmt::format("parse_operator: {} at column {}", what, pos_ + 1));
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) throw error(fmt::format("expected '{}'", c));
    ++pos_;
  }

  double number() {
    skip_ws();
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) throw error("expected a number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }

  bool starts_number() const {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '(';
  }

  cplx coefficient() {
    skip_ws();
    if (peek() == '(') {
      ++pos_;
      const double re = number();
      skip_ws();
      const char sgn = peek();
      if (sgn != '+' && sgn != '-') throw error("expected '+' or '-' in complex literal");
      ++pos_;
      const double im = number();
      skip_ws();
      if (peek() != 'i' && peek() != 'j') throw error("expected 'i' in complex literal");
      ++pos_;
      expect(')');
      return {re, sgn == '-' ? -im : im};
    }
    const double v = number();
    if (peek() == 'i' || peek() == 'j') {
      ++pos_;
      return {0.0, v};
    }
    return {v, 0.0};
  }

  std::string word() {
    std::string w;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                         peek() == '/')) {
      w += s_[pos_++];
    }
    return w;
  }

  Envelope envelope() {
    ++pos_;  // '@'
    const std::string kind = word();
    expect('(');
    if (kind == "rcp") {
      skip_ws();
      const std::string label = word();
      const auto it = ctx_.pulses.find(label);
      if (it == ctx_.pulses.end()) throw error(fmt::format("unknown pulse '{}'", label));
      expect(')');
      return Envelope::rcp(it->second);
    }
    if (kind != "cos" && kind != "sin") throw error(fmt::format("unknown envelope '@{}'", kind));
    double w = 0.0, phi = 0.0;
    bool have_w = false;
    while (true) {
      skip_ws();
      const std::string key = word();
      expect('=');
      const double v = number();
      if (key == "w") {
        w = v;
        have_w = true;
      } else if (key == "phi") {
        phi = v;
      } else {
        throw error(fmt::format("unknown envelope argument '{}'", key));
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      break;
    }
    expect(')');
    if (!have_w) throw error("envelope requires w=");
    return kind == "cos" ? Envelope::cosine(w, phi) : Envelope::sine(w, phi);
  }

  void parse_term(OperatorSum& out, double sign) {
    skip_ws();
    cplx c = 1.0;
    bool have_coeff = false;
    if (starts_number()) {
      c = coefficient();
      have_coeff = true;
      skip_ws();
      if (peek() == '*') {
        ++pos_;
      } else if (peek() != '@' && !at_end() && peek() != '+' && peek() != '-') {
        throw error("expected '*' after coefficient");
      }
    }
    std::vector<PauliString::Factor> factors;
    std::uint64_t seen = 0;
    bool identity = false;
    while (true) {
      skip_ws();
      const char a = peek();
      if (a == 'I' && !(pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
        ++pos_;
        identity = true;
        continue;
      }
      if (a != 'X' && a != 'Y' && a != 'Z') break;
      ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) throw error("expected site index");
      std::size_t site = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        site = site * 10 + static_cast<std::size_t>(peek() - '0');
        ++pos_;
        if (site >= kMaxSites) throw error("site index too large");
      }
      if (site >= n_sites_) throw error(fmt::format("site {} out of range", site));
      if (seen & (std::uint64_t{1} << site)) throw error(fmt::format("site {} repeated", site));
      seen |= std::uint64_t{1} << site;
      factors.push_back({site, a == 'X' ? Axis::X : (a == 'Y' ? Axis::Y : Axis::Z)});
    }
    if (factors.empty() && !identity && !have_coeff) throw error("expected a term");
    if (identity && !factors.empty()) throw error("'I' cannot be combined with Pauli factors");
    std::sort(factors.begin(), factors.end(),
              [](const auto& l, const auto& r) { return l.site < r.site; });
    Envelope env;
    while (true) {
      skip_ws();
      if (peek() != '@') break;
      env = env * envelope();
    }
    out.add(c * sign, PauliString::from_factors(factors), env);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t n_sites_;
  const ParseContext& ctx_;
};

}  // namespace

OperatorSum parse_operator(std::string_view text, std::size_t n_sites, const ParseContext& ctx) {
  return Parser(text, n_sites, ctx).parse();
}

}  // namespace resilience
