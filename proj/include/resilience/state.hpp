#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "resilience/fermion.hpp"
#include "resilience/linalg.hpp"

namespace resilience {

class StateVector {
 public:
  // Full register of n qubits; amplitudes must have length 2^n and unit norm.
  static StateVector full(CVector amplitudes);
  static StateVector in_sector(CVector amplitudes, std::shared_ptr<const SectorBasis> basis);

  static StateVector basis_state(std::size_t n_sites, std::uint64_t index);
  static StateVector plus_state(std::size_t n_sites);
  // One character per site, site 0 first: '0', '1', '+', '-'.
  static StateVector product_state(const std::string& spec);

  const CVector& amplitudes() const { return amps_; }
  bool is_sector() const { return basis_ != nullptr; }
  const std::shared_ptr<const SectorBasis>& sector() const { return basis_; }
  std::size_t n_sites() const { return n_sites_; }  // qubits of the full register

  // Full-register amplitudes; sector states are embedded.
  CVector full_amplitudes() const;

 private:
  StateVector(CVector a, std::size_t n, std::shared_ptr<const SectorBasis> b)
      : amps_(std::move(a)), n_sites_(n), basis_(std::move(b)) {}
  CVector amps_;
  std::size_t n_sites_;
  std::shared_ptr<const SectorBasis> basis_;
};

void check_normalized(const CVector& v, double tol = 1e-10);

struct ReducedDensityMatrix {
  std::vector<std::size_t> kept;
  CMatrix rho;
};

// Index bookkeeping for repeated partial traces onto the same qubit set.
class PartialTrace {
 public:
  PartialTrace(std::size_t n_sites, std::vector<std::size_t> keep);
  CMatrix operator()(const CVector& psi) const;
  const std::vector<std::size_t>& kept() const { return keep_; }
  std::size_t n_sites() const { return n_; }

 private:
  std::size_t n_;
  std::vector<std::size_t> keep_;
  std::uint64_t keep_mask_;
  std::vector<std::uint32_t> row_, col_;
};

ReducedDensityMatrix reduced_density(const StateVector& psi, const std::vector<std::size_t>& keep);
ReducedDensityMatrix reduced_density(const CVector& psi, std::size_t n_sites,
                                     const std::vector<std::size_t>& keep);

enum class EntropyUnits { Bits, Nats };
double entropy(const CMatrix& rho, EntropyUnits units = EntropyUnits::Nats);
double entropy(const ReducedDensityMatrix& rho, EntropyUnits units = EntropyUnits::Nats);

// Fixture format: "<stem>.csv" holds header + rows "index,re,im"; "<stem>.bin"
// holds a little-endian uint64 length followed by interleaved float64 re/im.
void write_state_fixture(const std::string& stem, const CVector& v);
CVector read_state_fixture_csv(const std::string& path);
CVector read_state_fixture_bin(const std::string& path);

}  // namespace resilience
