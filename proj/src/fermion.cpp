#include "resilience/fermion.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace resilience {

OperatorSum jw_operator(FermionMode mode, Ladder kind, std::size_t n_sites) {
  const std::size_t j = mode.index();
  if (j >= n_sites) throw std::invalid_argument("jw_operator: mode outside register");
  const std::uint64_t bit = std::uint64_t{1} << j;
  const std::uint64_t tail = bit - 1;
  const double ysign = kind == Ladder::Annihilate ? 1.0 : -1.0;
  OperatorSum op(n_sites);
  op.add(0.5, PauliString(bit, tail));
  op.add(cplx(0.0, 0.5 * ysign), PauliString(bit, tail | bit));
  return op;
}

OperatorSum number_operator(FermionMode mode, std::size_t n_sites) {
  const std::size_t j = mode.index();
  if (j >= n_sites) throw std::invalid_argument("number_operator: mode outside register");
  OperatorSum op(n_sites);
  op.add(0.5, PauliString());
  op.add(-0.5, PauliString::single(j, Axis::Z));
  return op;
}

std::vector<Edge> chain_edges(std::size_t L, Boundary boundary) {
  return ladder_edges(1, L, boundary);
}

std::vector<Edge> ladder_edges(std::size_t rows, std::size_t cols, Boundary boundary) {
  std::set<Edge> seen;
  std::vector<Edge> edges;
  auto add = [&](std::size_t a, std::size_t b) {
    if (a == b) return;
    const Edge e{std::min(a, b), std::max(a, b)};
    if (seen.insert(e).second) edges.push_back(e);
  };
  const bool wrap = boundary == Boundary::Periodic;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t s = r * cols + c;
      if (c + 1 < cols) add(s, s + 1);
      else if (wrap && cols > 2) add(s, r * cols);
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t s = r * cols + c;
      if (r + 1 < rows) add(s, s + cols);
      else if (wrap && rows > 2) add(s, c);
    }
  }
  return edges;
}

OperatorSum build_hubbard_on_edges(std::size_t L, const std::vector<Edge>& edges, double V,
                                   double hopping) {
  if (L < 2) throw std::invalid_argument("build_hubbard: L must be at least 2");
  const std::size_t n = 2 * L;
  OperatorSum h(n);
  for (const auto& [i, j] : edges) {
    if (i >= L || j >= L) throw std::invalid_argument("build_hubbard: edge outside lattice");
    for (Spin s : {Spin::Up, Spin::Down}) {
      const OperatorSum hop = jw_operator({i, s}, Ladder::Create, n) *
                              jw_operator({j, s}, Ladder::Annihilate, n);
      h = h + (hop + hop.adjoint()) * cplx(-hopping);
    }
  }
  if (V != 0.0) {
    for (std::size_t i = 0; i < L; ++i) {
      h = h + number_operator({i, Spin::Up}, n) * number_operator({i, Spin::Down}, n) * cplx(V);
    }
  }
  return h.simplified(1e-15);
}

OperatorSum build_hubbard(std::size_t L, double V, double hopping, Boundary boundary) {
  return build_hubbard_on_edges(L, chain_edges(L, boundary), V, hopping);
}

OperatorSum hubbard_perturbation(std::size_t L, double delta) {
  if (L < 1) throw std::invalid_argument("hubbard_perturbation: L must be positive");
  const std::size_t n = 2 * L;
  OperatorSum h(n);
  if (delta == 0.0) return h;
  for (std::size_t i = 0; i < L; ++i) {
    h = h + number_operator({i, Spin::Up}, n) * number_operator({i, Spin::Down}, n) * cplx(delta);
  }
  return h.simplified(1e-15);
}

SectorBasis::SectorBasis(std::size_t L, std::size_t n_up, std::size_t n_down)
    : L_(L), n_up_(n_up), n_down_(n_down) {
  if (L == 0 || 2 * L > kMaxSites) throw std::invalid_argument("SectorBasis: bad L");
  if (n_up > L || n_down > L) throw std::invalid_argument("SectorBasis: too many particles");
  std::vector<std::uint64_t> ups, downs;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << L); ++m) {
    const auto k = static_cast<std::size_t>(std::popcount(m));
    std::uint64_t spread = 0;
    for (std::size_t s = 0; s < L; ++s) {
      if ((m >> s) & 1u) spread |= std::uint64_t{1} << (2 * s);
    }
    if (k == n_up) ups.push_back(spread);
    if (k == n_down) downs.push_back(spread << 1);
  }
  for (auto u : ups) {
    for (auto d : downs) states_.push_back(u | d);
  }
  std::sort(states_.begin(), states_.end());
}

std::optional<std::size_t> SectorBasis::index_of(std::uint64_t mask) const {
  const auto it = std::lower_bound(states_.begin(), states_.end(), mask);
  if (it == states_.end() || *it != mask) return std::nullopt;
  return static_cast<std::size_t>(it - states_.begin());
}

namespace {

template <typename Emit>
void sector_columns(const OperatorSum& op, const SectorBasis& basis, double t, Emit emit) {
  if (op.n_sites() != 2 * basis.L()) {
    throw std::invalid_argument("project_to_sector: operator width does not match 2L modes");
  }
  std::vector<std::pair<PauliString, cplx>> terms;
  for (const Term& term : op.terms()) {
    terms.emplace_back(term.pauli,
                       term.coefficient * (term.envelope.is_constant() ? 1.0 : term.envelope(t)));
  }
  std::vector<std::pair<std::uint64_t, cplx>> out;
  const auto& states = basis.states();
  for (std::size_t col = 0; col < states.size(); ++col) {
    const std::uint64_t b = states[col];
    out.clear();
    for (const auto& [p, c] : terms) out.emplace_back(p.target(b), c * p.phase(b));
    std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    for (std::size_t k = 0; k < out.size();) {
      const std::uint64_t target = out[k].first;
      cplx amp = 0.0;
      for (; k < out.size() && out[k].first == target; ++k) amp += out[k].second;
      const auto row = basis.index_of(target);
      if (!row) {
        if (std::abs(amp) > 1e-12) {
          throw std::invalid_argument(fmt::format(
              "project_to_sector: operator leaves the ({},{}) sector", basis.n_up(), basis.n_down()));
        }
        continue;
      }
      emit(*row, col, amp);
    }
  }
}

}  // namespace

CMatrix project_to_sector(const OperatorSum& op, const SectorBasis& basis, double t) {
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  CMatrix m = CMatrix::Zero(d, d);
  sector_columns(op, basis, t, [&](std::size_t r, std::size_t c, cplx a) {
    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += a;
  });
  return m;
}

RMatrix project_to_sector_real(const OperatorSum& op, const SectorBasis& basis) {
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  RMatrix m = RMatrix::Zero(d, d);
  sector_columns(op, basis, 0.0, [&](std::size_t r, std::size_t c, cplx a) {
    if (std::abs(a.imag()) > 1e-12) {
      throw std::invalid_argument("project_to_sector_real: complex matrix element");
    }
    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += a.real();
  });
  return m;
}

RSparse project_to_sector_sparse(const OperatorSum& op, const SectorBasis& basis) {
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  std::vector<Eigen::Triplet<double>> entries;
  sector_columns(op, basis, 0.0, [&](std::size_t r, std::size_t c, cplx a) {
    if (std::abs(a.imag()) > 1e-12) {
      throw std::invalid_argument("project_to_sector_sparse: complex matrix element");
    }
    entries.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), a.real());
  });
  RSparse m(d, d);
  m.setFromTriplets(entries.begin(), entries.end());
  m.prune(0.0);
  return m;
}

CVector sector_to_full(const CVector& v, const SectorBasis& basis) {
  if (static_cast<std::size_t>(v.size()) != basis.dimension()) {
    throw std::invalid_argument("sector_to_full: dimension mismatch");
  }
  CVector full = CVector::Zero(static_cast<Eigen::Index>(std::uint64_t{1} << (2 * basis.L())));
  const auto& states = basis.states();
  for (std::size_t i = 0; i < states.size(); ++i) {
    full(static_cast<Eigen::Index>(states[i])) = v(static_cast<Eigen::Index>(i));
  }
  return full;
}

CVector full_to_sector(const CVector& v, const SectorBasis& basis, double tol) {
  const auto& states = basis.states();
  CVector out(static_cast<Eigen::Index>(states.size()));
  double inside = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(states[i]));
    inside += std::norm(out(static_cast<Eigen::Index>(i)));
  }
  if (std::abs(v.squaredNorm() - inside) > tol) {
    throw std::invalid_argument("full_to_sector: state has weight outside the sector");
  }
  return out;
}

std::uint64_t occupation_mask(const std::vector<Occupation>& occ, std::size_t L) {
  std::uint64_t mask = 0;
  for (const Occupation& o : occ) {
    if (o.site >= L) throw std::invalid_argument(fmt::format("occupation: site {} outside lattice", o.site + 1));
    for (Spin s : o.spins) {
      const std::uint64_t bit = std::uint64_t{1} << FermionMode{o.site, s}.index();
      if (mask & bit) throw std::invalid_argument("occupation: mode listed twice");
      mask |= bit;
    }
  }
  return mask;
}

std::vector<Occupation> parse_occupations(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw std::invalid_argument("occupations: expected [(site,spin),...]");
  }
  std::vector<Occupation> out;
  std::size_t pos = 1;
  while (pos < s.size() - 1) {
    if (s[pos] == ',') {
      ++pos;
      continue;
    }
    if (s[pos] != '(') throw std::invalid_argument("occupations: expected '('");
    const std::size_t close = s.find(')', pos);
    const std::size_t comma = s.find(',', pos);
    if (close == std::string::npos || comma == std::string::npos || comma > close) {
      throw std::invalid_argument("occupations: malformed entry");
    }
    const std::string site_txt = s.substr(pos + 1, comma - pos - 1);
    const std::string spin_txt = s.substr(comma + 1, close - comma - 1);
    std::size_t used = 0;
    const long site = std::stol(site_txt, &used);
    if (used != site_txt.size() || site < 1) {
      throw std::invalid_argument("occupations: site labels are 1-based positive integers");
    }
    Occupation o{static_cast<std::size_t>(site - 1), {}};
    if (spin_txt == "up") o.spins = {Spin::Up};
    else if (spin_txt == "down") o.spins = {Spin::Down};
    else if (spin_txt == "both") o.spins = {Spin::Up, Spin::Down};
    else throw std::invalid_argument("occupations: spin must be up, down or both");
    out.push_back(o);
    pos = close + 1;
  }
  return out;
}

std::vector<std::size_t> site_modes(const std::vector<std::size_t>& sites) {
  std::vector<std::size_t> modes;
  for (std::size_t s : sites) {
    modes.push_back(2 * s);
    modes.push_back(2 * s + 1);
  }
  std::sort(modes.begin(), modes.end());
  return modes;
}

}  // namespace resilience
