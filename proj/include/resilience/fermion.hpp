#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "resilience/linalg.hpp"
#include "resilience/operator_sum.hpp"

namespace resilience {

enum class Spin : std::uint8_t { Up = 0, Down = 1 };

// Modes are interleaved site-major: mode = 2*site + spin.
struct FermionMode {
  std::size_t site;
  Spin spin;
  std::size_t index() const { return 2 * site + static_cast<std::size_t>(spin); }
};

enum class Ladder { Create, Annihilate };
enum class Boundary { Open, Periodic };

// Jordan-Wigner: a_j = (prod_{k<j} Z_k) (X_j + i Y_j)/2; occupied = |1>.
OperatorSum jw_operator(FermionMode mode, Ladder kind, std::size_t n_sites);
OperatorSum number_operator(FermionMode mode, std::size_t n_sites);

using Edge = std::pair<std::size_t, std::size_t>;

std::vector<Edge> chain_edges(std::size_t L, Boundary boundary);
// rows x cols grid, site = r*cols + c. Periodic wraps are added only when
// they connect a new pair (a length-2 direction gets a single bond).
std::vector<Edge> ladder_edges(std::size_t rows, std::size_t cols, Boundary boundary);

// -hopping sum_{<ij>,s} (a_is^dag a_js + h.c.) + V sum_i n_iu n_id on 2L qubits.
OperatorSum build_hubbard_on_edges(std::size_t L, const std::vector<Edge>& edges, double V,
                                   double hopping);
OperatorSum build_hubbard(std::size_t L, double V, double hopping, Boundary boundary);
OperatorSum hubbard_perturbation(std::size_t L, double delta);

class SectorBasis {
 public:
  SectorBasis(std::size_t L, std::size_t n_up, std::size_t n_down);

  std::size_t L() const { return L_; }
  std::size_t n_up() const { return n_up_; }
  std::size_t n_down() const { return n_down_; }
  std::size_t dimension() const { return states_.size(); }
  const std::vector<std::uint64_t>& states() const { return states_; }
  std::optional<std::size_t> index_of(std::uint64_t mask) const;
  bool contains(std::uint64_t mask) const { return index_of(mask).has_value(); }

 private:
  std::size_t L_, n_up_, n_down_;
  std::vector<std::uint64_t> states_;  // ascending
};

// Dense sector matrix. Throws if the operator maps sector states outside
// the sector (checked on every column).
CMatrix project_to_sector(const OperatorSum& op, const SectorBasis& basis, double t = 0.0);
RMatrix project_to_sector_real(const OperatorSum& op, const SectorBasis& basis);
RSparse project_to_sector_sparse(const OperatorSum& op, const SectorBasis& basis);

CVector sector_to_full(const CVector& v, const SectorBasis& basis);
CVector full_to_sector(const CVector& v, const SectorBasis& basis, double tol = 1e-10);

// Occupation specification: (site, spin) pairs with 0-based sites.
struct Occupation {
  std::size_t site;
  std::vector<Spin> spins;
};
std::uint64_t occupation_mask(const std::vector<Occupation>& occ, std::size_t L);
// Parses "[(1,both),(3,up)]" with 1-based site labels.
std::vector<Occupation> parse_occupations(const std::string& text);

// Qubit (mode) indices covering a set of lattice sites.
std::vector<std::size_t> site_modes(const std::vector<std::size_t>& sites);

}  // namespace resilience
