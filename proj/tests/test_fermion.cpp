#include <gtest/gtest.h>

#include <bit>
#include <set>

#include "resilience/dynamics.hpp"
#include "resilience/fermion.hpp"
#include "resilience/linalg.hpp"
#include "resilience/rng.hpp"
#include "resilience/state.hpp"

using namespace resilience;

namespace {

// Independent oracle: second-quantized action on occupation bitstrings.
// c_j |n> = (-1)^{sum_{k<j} n_k} |n - e_j| when n_j = 1.
CMatrix annihilator_oracle(std::size_t mode, std::size_t n_modes) {
  const std::size_t dim = std::size_t{1} << n_modes;
  CMatrix m = CMatrix::Zero(dim, dim);
  for (std::size_t b = 0; b < dim; ++b) {
    if (!((b >> mode) & 1)) continue;
    const int parity = std::popcount(b & ((std::size_t{1} << mode) - 1)) & 1;
    m(b ^ (std::size_t{1} << mode), b) = parity ? -1.0 : 1.0;
  }
  return m;
}

std::vector<FermionMode> all_modes(std::size_t L) {
  std::vector<FermionMode> out;
  for (std::size_t s = 0; s < L; ++s) {
    out.push_back({s, Spin::Up});
    out.push_back({s, Spin::Down});
  }
  return out;
}

}  // namespace

TEST(JordanWigner, MatchesOccupationOracle) {
  const std::size_t L = 3;
  for (const FermionMode& m : all_modes(L)) {
    const CMatrix a = to_dense(jw_operator(m, Ladder::Annihilate, 2 * L));
    EXPECT_LT((a - annihilator_oracle(m.index(), 2 * L)).norm(), 1e-12);
    const CMatrix c = to_dense(jw_operator(m, Ladder::Create, 2 * L));
    EXPECT_LT((c - a.adjoint()).norm(), 1e-12);
  }
}

TEST(JordanWigner, CanonicalAnticommutators) {
  const std::size_t L = 3;
  const auto modes = all_modes(L);
  const std::size_t dim = 64;
  for (const FermionMode& p : modes) {
    const CMatrix ap = to_dense(jw_operator(p, Ladder::Annihilate, 2 * L));
    for (const FermionMode& q : modes) {
      const CMatrix aq = to_dense(jw_operator(q, Ladder::Annihilate, 2 * L));
      const CMatrix anti = ap * aq.adjoint() + aq.adjoint() * ap;
      const CMatrix expect = CMatrix::Identity(dim, dim) * (p.index() == q.index() ? 1.0 : 0.0);
      EXPECT_LT((anti - expect).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((ap * aq + aq * ap).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(JordanWigner, NumberOperatorIsProjector) {
  const FermionMode m{1, Spin::Down};
  const CMatrix n = to_dense(number_operator(m, 4));
  EXPECT_LT((n * n - n).norm(), 1e-12);
  for (std::size_t b = 0; b < 16; ++b) EXPECT_NEAR(n(b, b).real(), (b >> m.index()) & 1, 1e-14);
}

TEST(Lattices, ChainAndLadderBonds) {
  EXPECT_EQ(chain_edges(8, Boundary::Periodic).size(), 8u);
  EXPECT_EQ(chain_edges(8, Boundary::Open).size(), 7u);
  EXPECT_EQ(chain_edges(2, Boundary::Periodic).size(), 1u);
  // 2x4 periodic: 4 rungs (length-2 direction, single bond) + 2 rows x 4 legs
  const auto e = ladder_edges(2, 4, Boundary::Periodic);
  EXPECT_EQ(e.size(), 12u);
  std::set<std::pair<std::size_t, std::size_t>> uniq;
  for (auto [a, b] : e) uniq.insert({std::min(a, b), std::max(a, b)});
  EXPECT_EQ(uniq.size(), e.size());
  EXPECT_EQ(ladder_edges(2, 4, Boundary::Open).size(), 10u);
}

TEST(Hubbard, HermitianAndConservesParticleNumbers) {
  const std::size_t L = 3;
  const OperatorSum h = build_hubbard(L, 0.5, 1.0, Boundary::Periodic);
  const CMatrix m = to_dense(h);
  EXPECT_TRUE(is_hermitian(m, 1e-12));
  OperatorSum nup(2 * L), ndn(2 * L);
  for (std::size_t s = 0; s < L; ++s) {
    nup = nup + number_operator({s, Spin::Up}, 2 * L);
    ndn = ndn + number_operator({s, Spin::Down}, 2 * L);
  }
  EXPECT_LT((m * to_dense(nup) - to_dense(nup) * m).norm(), 1e-12);
  EXPECT_LT((m * to_dense(ndn) - to_dense(ndn) * m).norm(), 1e-12);
}

TEST(Hubbard, DoubleOccupancyEnergyAndHopping) {
  // Two sites, open: the doubly occupied site has energy V; one-particle sector has eigenvalues +-t.
  const OperatorSum h = build_hubbard(2, 0.7, 1.0, Boundary::Open);
  const SectorBasis one(2, 1, 0);
  const RMatrix m1 = project_to_sector_real(h, one);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(m1);
  EXPECT_NEAR(es.eigenvalues()(0), -1.0, 1e-12);
  EXPECT_NEAR(es.eigenvalues()(1), 1.0, 1e-12);
  const SectorBasis two(2, 1, 1);
  const RMatrix m2 = project_to_sector_real(OperatorSum(build_hubbard(2, 0.7, 0.0, Boundary::Open)), two);
  const std::uint64_t doubly = occupation_mask({{0, {Spin::Up, Spin::Down}}}, 2);
  EXPECT_NEAR(m2(*two.index_of(doubly), *two.index_of(doubly)), 0.7, 1e-12);
}

TEST(Hubbard, PerturbationIsDiagonal) {
  const OperatorSum hp = hubbard_perturbation(3, 0.01);
  for (const Term& t : hp.simplified().terms()) EXPECT_EQ(t.pauli.x_bits(), 0u);
  EXPECT_TRUE(is_hermitian(to_dense(hp), 1e-14));
}

TEST(Sector, DimensionAndOrdering) {
  const SectorBasis b(8, 4, 4);
  EXPECT_EQ(b.dimension(), 4900u);
  EXPECT_TRUE(std::is_sorted(b.states().begin(), b.states().end()));
  for (std::uint64_t s : b.states()) EXPECT_EQ(std::popcount(s), 8);
  EXPECT_FALSE(b.index_of(0).has_value());
}

TEST(Sector, ProjectionMatchesFullMatrix) {
  const std::size_t L = 3;
  const OperatorSum h = build_hubbard(L, 0.5, 1.0, Boundary::Periodic);
  const CMatrix full = to_dense(h);
  const SectorBasis b(L, 2, 1);
  const CMatrix sec = project_to_sector(h, b);
  for (std::size_t i = 0; i < b.dimension(); ++i)
    for (std::size_t j = 0; j < b.dimension(); ++j)
      EXPECT_LT(std::abs(sec(i, j) - full(b.states()[i], b.states()[j])), 1e-14);
  EXPECT_LT((project_to_sector_real(h, b).cast<cplx>() - sec).norm(), 1e-14);
}

TEST(Sector, EvolutionEqualsFullSpace) {
  const std::size_t L = 3;
  const OperatorSum h = build_hubbard(L, 0.5, 1.0, Boundary::Periodic);
  auto basis = std::make_shared<const SectorBasis>(L, 2, 1);
  Rng rng(4);
  const CVector sec0 = haar_state(basis->dimension(), rng);
  const StateVector s0 = StateVector::in_sector(sec0, basis);
  for (double t : {0.3, 1.7, 5.0}) {
    const CVector via_sector = evolve_const(project_to_sector(h, *basis), s0, t).full_amplitudes();
    const CVector via_full = expm_hermitian(to_dense(h), t) * sector_to_full(sec0, *basis);
    EXPECT_LT((via_sector - via_full).norm(), 1e-9) << t;
  }
}

TEST(Sector, EmbeddingRoundTrip) {
  const SectorBasis b(3, 1, 2);
  Rng rng(8);
  const CVector v = haar_state(b.dimension(), rng);
  EXPECT_LT((full_to_sector(sector_to_full(v, b), b) - v).norm(), 1e-15);
  CVector leak = sector_to_full(v, b);
  leak(0) = 0.5;
  EXPECT_THROW(full_to_sector(leak, b), std::invalid_argument);
}

TEST(Occupations, ParseOneBasedLabels) {
  const auto occ = parse_occupations("[(1,both),(3,up),(4,down)]");
  ASSERT_EQ(occ.size(), 3u);
  EXPECT_EQ(occ[0].site, 0u);
  EXPECT_EQ(occ[1].site, 2u);
  const std::uint64_t m = occupation_mask(occ, 4);
  EXPECT_EQ(m, (1u << 0) | (1u << 1) | (1u << 4) | (1u << 7));
  EXPECT_THROW(parse_occupations("[(0,up)]"), std::invalid_argument);
  EXPECT_THROW(parse_occupations("[(1,sideways)]"), std::invalid_argument);
  EXPECT_EQ(site_modes({0, 2}), (std::vector<std::size_t>{0, 1, 4, 5}));
}
