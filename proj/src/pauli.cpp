#include "resilience/pauli.hpp"

#include <bit>
#include <stdexcept>

namespace resilience {

char axis_char(Axis a) {
  switch (a) {
    case Axis::X: return 'X';
    case Axis::Y: return 'Y';
    case Axis::Z: return 'Z';
  }
  return '?';
}

PauliString PauliString::from_factors(const std::vector<Factor>& factors) {
  std::uint64_t x = 0, z = 0;
  bool first = true;
  std::size_t last = 0;
  for (const Factor& f : factors) {
    if (f.site >= kMaxSites) throw std::invalid_argument("PauliString: site index exceeds 63");
    if (!first && f.site <= last) {
      throw std::invalid_argument("PauliString: site indices must be strictly increasing");
    }
    first = false;
    last = f.site;
    const std::uint64_t bit = std::uint64_t{1} << f.site;
    if (f.axis != Axis::Z) x |= bit;
    if (f.axis != Axis::X) z |= bit;
  }
  return PauliString(x, z);
}

PauliString PauliString::single(std::size_t site, Axis axis) {
  return from_factors({{site, axis}});
}

std::size_t PauliString::weight() const { return static_cast<std::size_t>(std::popcount(x_ | z_)); }

std::size_t PauliString::max_site() const {
  const std::uint64_t s = x_ | z_;
  return s == 0 ? 0 : 63 - static_cast<std::size_t>(std::countl_zero(s));
}

std::optional<Axis> PauliString::axis_at(std::size_t site) const {
  const bool x = (x_ >> site) & 1u;
  const bool z = (z_ >> site) & 1u;
  if (x && z) return Axis::Y;
  if (x) return Axis::X;
  if (z) return Axis::Z;
  return std::nullopt;
}

std::vector<PauliString::Factor> PauliString::factors() const {
  std::vector<Factor> out;
  std::uint64_t s = x_ | z_;
  while (s) {
    const std::size_t site = static_cast<std::size_t>(std::countr_zero(s));
    out.push_back({site, *axis_at(site)});
    s &= s - 1;
  }
  return out;
}

std::vector<std::size_t> PauliString::support() const {
  std::vector<std::size_t> out;
  std::uint64_t s = x_ | z_;
  while (s) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(s)));
    s &= s - 1;
  }
  return out;
}

bool PauliString::commutes_with(const PauliString& o) const {
  return ((std::popcount(x_ & o.z_) + std::popcount(z_ & o.x_)) & 1) == 0;
}

std::complex<double> PauliString::phase(std::uint64_t b) const {
  // i^{#Y} from Y = iXZ, then (-1)^{b.z} from the Z part acting first.
  static constexpr std::complex<double> kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const int k = (std::popcount(x_ & z_) + 2 * std::popcount(b & z_)) & 3;
  return kIPow[k];
}

std::string PauliString::str() const {
  if (is_identity()) return "I";
  std::string out;
  for (const Factor& f : factors()) {
    if (!out.empty()) out += ' ';
    out += axis_char(f.axis);
    out += std::to_string(f.site);
  }
  return out;
}

PauliProduct pauli_mul(const PauliString& p, const PauliString& q) {
  // Work in the i^{-#Y} X^x Z^z representation: P = i^{y_p} X^{x_p} Z^{z_p}.
  // Z^{z_p} X^{x_q} = (-1)^{z_p.x_q} X^{x_q} Z^{z_p}, so
  // P Q = i^{y_p + y_q - y_r} (-1)^{z_p.x_q} R.
  const std::uint64_t xr = p.x_bits() ^ q.x_bits();
  const std::uint64_t zr = p.z_bits() ^ q.z_bits();
  int k = std::popcount(p.x_bits() & p.z_bits()) + std::popcount(q.x_bits() & q.z_bits()) -
          std::popcount(xr & zr) + 2 * std::popcount(p.z_bits() & q.x_bits());
  k = ((k % 4) + 4) % 4;
  static constexpr std::complex<double> kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return {kIPow[k], PauliString(xr, zr)};
}

std::uint64_t extract_bits(std::uint64_t value, std::uint64_t mask) {
  std::uint64_t out = 0;
  int pos = 0;
  while (mask) {
    const std::uint64_t low = mask & (~mask + 1);
    if (value & low) out |= std::uint64_t{1} << pos;
    ++pos;
    mask &= mask - 1;
  }
  return out;
}

std::uint64_t deposit_bits(std::uint64_t value, std::uint64_t mask) {
  std::uint64_t out = 0;
  int pos = 0;
  while (mask) {
    const std::uint64_t low = mask & (~mask + 1);
    if ((value >> pos) & 1u) out |= low;
    ++pos;
    mask &= mask - 1;
  }
  return out;
}

}  // namespace resilience
