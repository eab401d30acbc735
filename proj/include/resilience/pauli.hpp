#pragma once

#include <compare>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace resilience {

enum class Axis : std::uint8_t { X, Y, Z };

char axis_char(Axis a);

constexpr std::size_t kMaxSites = 64;

// A tensor product of single-site Paulis, stored as x/z bitmasks with
// Y = (x=1, z=1). Site 0 is the least significant qubit of a dense index.
class PauliString {
 public:
  struct Factor {
    std::size_t site;
    Axis axis;
    bool operator==(const Factor&) const = default;
  };

  PauliString() = default;
  PauliString(std::uint64_t x_bits, std::uint64_t z_bits) : x_(x_bits), z_(z_bits) {}

  // Factors must have strictly increasing site indices.
  static PauliString from_factors(const std::vector<Factor>& factors);
  static PauliString single(std::size_t site, Axis axis);

  std::uint64_t x_bits() const { return x_; }
  std::uint64_t z_bits() const { return z_; }
  std::uint64_t support_bits() const { return x_ | z_; }
  bool is_identity() const { return (x_ | z_) == 0; }
  std::size_t weight() const;
  std::size_t max_site() const;  // only meaningful when not identity
  std::optional<Axis> axis_at(std::size_t site) const;
  std::vector<Factor> factors() const;
  std::vector<std::size_t> support() const;
  bool commutes_with(const PauliString& other) const;

  // Action on a computational basis index: P|b> = phase(b) |target(b)>.
  std::uint64_t target(std::uint64_t b) const { return b ^ x_; }
  std::complex<double> phase(std::uint64_t b) const;

  std::string str() const;  // "X0 Z2", or "I"

  auto operator<=>(const PauliString&) const = default;

 private:
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
};

struct PauliProduct {
  std::complex<double> phase;
  PauliString product;
};

PauliProduct pauli_mul(const PauliString& p, const PauliString& q);

// Compact an arbitrary bit set onto positions 0..k-1 in increasing order.
std::uint64_t extract_bits(std::uint64_t value, std::uint64_t mask);
std::uint64_t deposit_bits(std::uint64_t value, std::uint64_t mask);

}  // namespace resilience
