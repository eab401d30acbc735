#include "resilience/envelope.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace resilience {

void PulseParams::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("PulseParams: duration must be positive");
}

double rcp_waveform(double t, const PulseParams& p) {
  p.validate();
  const double T = p.duration;
  const double slack = 1e-12 * T;
  if (t < -slack || t > T + slack) {
    throw std::out_of_range(fmt::format("rcp_waveform: t={} outside [0, {}]", t, T));
  }
  if (t <= 0.0 || t >= T) return 0.0;
  const double s = t / T;
  // sin(pi s) = sin(pi (1 - s)); using the smaller argument makes the zero at s = 1 exact.
  const double window = std::sin(std::numbers::pi * (s <= 0.5 ? s : 1.0 - s));
  double series = p.a[0];
  for (int j = 1; j <= 5; ++j) {
    series += p.a[j] * std::cos(2.0 * std::numbers::pi * j * s + p.phi[j - 1]);
  }
  return p.amplitude * window * series;
}

Envelope Envelope::rcp(const PulseParams& p) {
  p.validate();
  Envelope e;
  e.factors_.push_back(Rcp{p});
  return e;
}

Envelope Envelope::cosine(double omega, double phase) {
  Envelope e;
  e.factors_.push_back(Cosine{omega, phase});
  return e;
}

Envelope Envelope::sine(double omega, double phase) {
  Envelope e;
  e.factors_.push_back(Sine{omega, phase});
  return e;
}

double Envelope::operator()(double t) const {
  double v = 1.0;
  for (const Factor& f : factors_) {
    if (const auto* r = std::get_if<Rcp>(&f)) {
      v *= rcp_waveform(t, r->pulse);
    } else if (const auto* c = std::get_if<Cosine>(&f)) {
      v *= std::cos(c->omega * t + c->phase);
    } else {
      const auto& s = std::get<Sine>(f);
      v *= std::sin(s.omega * t + s.phase);
    }
  }
  return v;
}

Envelope Envelope::operator*(const Envelope& other) const {
  Envelope e = *this;
  e.factors_.insert(e.factors_.end(), other.factors_.begin(), other.factors_.end());
  return e;
}

double Envelope::max_time() const {
  double tmax = std::numeric_limits<double>::infinity();
  for (const Factor& f : factors_) {
    if (const auto* r = std::get_if<Rcp>(&f)) tmax = std::min(tmax, r->pulse.duration);
  }
  return tmax;
}

std::string Envelope::str() const {
  std::string out;
  for (const Factor& f : factors_) {
    if (!out.empty()) out += ' ';
    if (const auto* r = std::get_if<Rcp>(&f)) {
      out += fmt::format("@rcp({})", r->pulse.label);
    } else if (const auto* c = std::get_if<Cosine>(&f)) {
      out += fmt::format("@cos(w={:.17g},phi={:.17g})", c->omega, c->phase);
    } else {
      const auto& s = std::get<Sine>(f);
      out += fmt::format("@sin(w={:.17g},phi={:.17g})", s.omega, s.phase);
    }
  }
  return out;
}

std::string envelope_key(const Envelope& e) {
  std::string key;
  for (const auto& f : e.factors()) {
    if (const auto* r = std::get_if<Envelope::Rcp>(&f)) {
      const PulseParams& p = r->pulse;
      key += fmt::format("r[{}|{:a}|{:a}", p.label, p.amplitude, p.duration);
      for (double a : p.a) key += fmt::format("|{:a}", a);
      for (double ph : p.phi) key += fmt::format("|{:a}", ph);
      key += ']';
    } else if (const auto* c = std::get_if<Envelope::Cosine>(&f)) {
      key += fmt::format("c[{:a}|{:a}]", c->omega, c->phase);
    } else {
      const auto& s = std::get<Envelope::Sine>(f);
      key += fmt::format("s[{:a}|{:a}]", s.omega, s.phase);
    }
  }
  return key;
}

}  // namespace resilience
