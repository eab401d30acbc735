#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "resilience/linalg.hpp"

namespace resilience {

// Gaussian and uniform draws from std::mt19937_64 seeded through
// std::seed_seq{seed_lo, seed_hi, stream_lo, stream_hi}. Both engine and
// seed_seq are fully specified by the standard, and the normal deviates come
// from the Box-Muller transform below rather than std::normal_distribution,
// whose algorithm is implementation-defined.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  double uniform();         // [0, 1), 53-bit resolution
  double normal();          // N(0, 1)
  std::uint64_t next_u64() { return engine_(); }
  std::size_t below(std::size_t n);  // uniform in [0, n)

  static std::string identity();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Haar-random pure state of dimension `dim` (normalized complex Gaussian vector).
CVector haar_state(std::size_t dim, Rng& rng);

}  // namespace resilience
