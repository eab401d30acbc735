#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

namespace resilience {

// Sine-windowed Fourier control pulse:
//   Omega(t) = amplitude * sin(pi t / T) * (a0 + sum_{j=1..5} a_j cos(2 pi j t / T + phi_j))
struct PulseParams {
  std::string label;
  double amplitude = 0.0;  // angular frequency (rad per time unit) unless noted otherwise
  double duration = 0.0;   // T
  std::array<double, 6> a{};
  std::array<double, 5> phi{};

  void validate() const;
  bool operator==(const PulseParams&) const = default;
};

double rcp_waveform(double t, const PulseParams& p);

// A real time-dependent scalar: a product of rcp/cos/sin factors. No factors
// means the constant 1.
class Envelope {
 public:
  struct Rcp {
    PulseParams pulse;
    bool operator==(const Rcp&) const = default;
  };
  struct Cosine {
    double omega;
    double phase;
    bool operator==(const Cosine&) const = default;
  };
  struct Sine {
    double omega;
    double phase;
    bool operator==(const Sine&) const = default;
  };
  using Factor = std::variant<Rcp, Cosine, Sine>;

  Envelope() = default;
  static Envelope rcp(const PulseParams& p);
  static Envelope cosine(double omega, double phase = 0.0);
  static Envelope sine(double omega, double phase = 0.0);

  bool is_constant() const { return factors_.empty(); }
  const std::vector<Factor>& factors() const { return factors_; }
  double operator()(double t) const;
  Envelope operator*(const Envelope& other) const;

  // Interval on which the envelope may be evaluated; rcp factors restrict it to [0, T].
  double max_time() const;

  std::string str() const;  // "" for constant, else "@rcp(label) @cos(w=..,phi=..)"
  bool operator==(const Envelope&) const = default;

 private:
  std::vector<Factor> factors_;
};

// Total order used for canonical term merging; equal keys mean identical envelopes.
std::string envelope_key(const Envelope& e);

}  // namespace resilience
