#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "resilience/bounds.hpp"
#include "resilience/linalg.hpp"
#include "resilience/perturbation.hpp"
#include "resilience/rng.hpp"

using namespace resilience;

namespace {

std::shared_ptr<const SpectralEvolver> evolver(const OperatorSum& h) {
  return std::make_shared<const SpectralEvolver>(to_dense(h));
}

OperatorSum op(const std::string& text, std::size_t n) { return parse_operator(text, n); }

// Maximally entangled state of qubits 0..k-1 with k..2k-1.
CVector max_entangled(std::size_t k) {
  const std::uint64_t d = std::uint64_t{1} << k;
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d * d));
  for (std::uint64_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i | (i << k))) = 1.0 / std::sqrt(double(d));
  return v;
}

}  // namespace

TEST(ExactError, IdentityAndPhase) {
  Rng rng(1);
  const CMatrix u0 = expm_hermitian(to_dense(build_qimf_1d(3)), 0.4);
  const CVector psi = haar_state(8, rng);
  EXPECT_EQ(exact_error(u0, u0, psi), 0.0);
  EXPECT_NEAR(exact_error(u0, -u0, psi), 2.0, 1e-14);
}

TEST(Grid, Validation) {
  TimeGrid g;
  g.points = {0.0};
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g.points = {0.1, 0.2};
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g.points = {0.0, 0.2, 0.2};
  EXPECT_THROW(g.validate(), std::invalid_argument);
  EXPECT_NO_THROW(TimeGrid::uniform(2.0, 4).validate());
}

TEST(Quadrature, CumulativeIntegralsOfKnownFunctions) {
  const TimeGrid g = TimeGrid::uniform(3.0, 6);
  QuadratureOptions o;
  o.rel_tol = 1e-8;
  o.max_level = 14;
  const CumulativeIntegrals ci =
      integrate_on_grid([](double t) { return std::vector<double>{std::cos(t), t * t}; }, 2, g, o);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(ci.values[0][i], std::sin(g.points[i]), 1e-7);
    EXPECT_NEAR(ci.values[1][i], std::pow(g.points[i], 3) / 3.0, 1e-7);
  }
  EXPECT_GT(ci.level, 2);
}

TEST(IntegralBound, ZeroPerturbation) {
  const OperatorSum h0 = build_qimf_1d(3);
  const SpectralTrajectory traj(evolver(h0), StateVector::plus_state(3));
  for (double v : integral_bound(OperatorSum(3), traj, TimeGrid::uniform(1.0, 4))) EXPECT_EQ(v, 0.0);
}

TEST(IntegralBound, AnticommutingPairIsStateIndependent) {
  const double a = 0.3, b = -0.7;
  OperatorSum hp(4);
  hp.add(a, PauliString(1, 0));
  hp.add(b, PauliString(1, 1));
  const auto ev = evolver(build_qimf_1d(4));
  const TimeGrid g = TimeGrid::uniform(2.0, 10);
  Rng rng(12);
  for (int k = 0; k < 50; ++k) {
    const SpectralTrajectory traj(ev, StateVector::full(haar_state(16, rng)));
    const auto ib = integral_bound(hp, traj, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ASSERT_NEAR(ib[i], g.points[i] * std::hypot(a, b), 1e-10) << k;
    }
  }
}

TEST(IntegralBound, LadderOrderingOnQimf) {
  const OperatorSum h0 = build_qimf_1d(4);
  const PerturbationRealization r = sample(standard_qimf_noise(4, 0.1, 0.01), 0);
  const OperatorSum h = (h0 + r.h_pert).simplified();
  const TimeGrid g = TimeGrid::uniform(1.0, 10);
  Rng rng(2);
  for (const CVector& psi0 : {StateVector::basis_state(4, 0).amplitudes(), haar_state(16, rng)}) {
    const SpectralTrajectory traj(evolver(h0), StateVector::full(psi0));
    const LadderSeries s = ladder_series(r.h_pert, traj, g);
    const auto ib = integral_bound(r.h_pert, traj, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double t = g.points[i];
      const double ex = exact_error(expm_hermitian(to_dense(h0), t), expm_hermitian(to_dense(h), t), psi0);
      EXPECT_LE(ex, s.integral[i] * (1 + 1e-4) + 1e-14) << t;
      EXPECT_LE(s.integral[i], s.entanglement[i] * (1 + 1e-4) + 1e-14) << t;
      EXPECT_NEAR(ib[i], s.integral[i], 1e-4 * ib[i] + 1e-14);  // same integrand, own refinement
    }
  }
}

TEST(HaarAverage, ExpectationMatchesFrobeniusSquared) {
  const PerturbationRealization r = sample(standard_qimf_noise(6, 0.1, 0.01), 5);
  const OperatorSum hp = r.h_pert.simplified();
  const double f2 = std::pow(frobenius_norm(hp), 2);
  Rng rng(99);
  const std::size_t n = 2000;
  double s = 0, s2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = resilience::apply(hp, haar_state(64, rng)).squaredNorm();
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  EXPECT_LT(std::abs(mean - f2), 3 * se);
}

TEST(Delta, MaximallyMixedAndProductLimits) {
  // Bell pairs on (0,1) and (2,3): every single-site marginal is I/2.
  CVector bell2 = CVector::Zero(16);
  for (std::uint64_t i : {0b0000u, 0b0011u, 0b1100u, 0b1111u}) bell2(i) = 0.5;
  EXPECT_NEAR(entanglement_delta(op("Z0 + 0.5*X2 + Y1", 4), bell2), 0.0, 1e-7);
  const CVector zero = StateVector::basis_state(2, 0).amplitudes();
  EXPECT_NEAR(entanglement_delta(op("X0 X1", 2), zero), std::sqrt(2.0 * 2.0 * std::log(2.0)), 1e-12);
  // identity parts do not enter
  EXPECT_NEAR(entanglement_delta(op("3*I + X0 X1", 2), zero), std::sqrt(4.0 * std::log(2.0)), 1e-12);
  EXPECT_NEAR(trace_term(op("3*I + X0 X1", 2)), 3.0, 1e-15);
  // same support terms are grouped: ||X0 + Z0|| = sqrt 2
  EXPECT_NEAR(entanglement_delta(op("X0 + Z0", 2), zero), std::sqrt(2.0) * std::sqrt(2.0 * std::log(2.0)), 1e-12);
}

TEST(Delta, LemmaHoldsOnRandomPsdOperators) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    OperatorSum b(5);
    for (int k = 0; k < 4; ++k) {
      std::uint64_t x = 0, z = 0;
      for (int w = 0; w < 2; ++w) {
        const std::uint64_t bit = std::uint64_t{1} << rng.below(5);
        const std::size_t axis = rng.below(3);  // X, Y, Z
        if (axis != 2) x |= bit;
        if (axis != 0) z |= bit;
      }
      b.add(cplx(rng.normal(), rng.normal()), PauliString(x, z));
    }
    const OperatorSum a = hermitian_square(b);
    const CVector psi = haar_state(32, rng);
    const double lhs = std::abs(expectation(a, psi));
    const double direct = std::abs(psi.dot(to_dense(a) * psi));
    ASSERT_NEAR(lhs, direct, 1e-10);
    ASSERT_LE(direct, (trace_term(a) + entanglement_delta(a, psi)) * (1 + 1e-12) + 1e-12) << trial;
  }
}

TEST(SplitBound, Limits) {
  const OperatorSum h0 = build_qimf_1d(4);
  const PerturbationRealization r = sample(standard_qimf_noise(4, 0.1, 0.01), 1);
  const TimeGrid g = TimeGrid::uniform(2.0, 8);
  const SpectralTrajectory traj(evolver(h0), StateVector::basis_state(4, 0));
  const LadderSeries s = ladder_series(r.h_pert, traj, g);
  const auto full = split_bound(s, g, g.final_time());
  const auto haar = split_bound(s, g, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(full[i], s.integral[i], 1e-15);
    EXPECT_NEAR(haar[i], g.points[i] * s.frobenius, 1e-15);
  }
  EXPECT_THROW(split_bound(s, g, 2.5), std::invalid_argument);
  EXPECT_NEAR(s.frobenius, frobenius_norm(r.h_pert), 1e-15);
}

TEST(Crossover, Rule) {
  const TimeGrid g = TimeGrid::uniform(1.0, 4);
  EXPECT_EQ(estimate_crossover({1.0, 1.0, 1.0, 1.0, 1.0}, 1.0, g), 0.0);
  EXPECT_EQ(estimate_crossover({0.0, 0.0, 0.0, 0.0, 0.0}, 1.0, g), 1.0);
  EXPECT_EQ(estimate_crossover({0.0, 1.01, 2.0, 0.98, 1.02}, 1.0, g), 0.75);
  EXPECT_EQ(estimate_crossover({0.0, 1.01, 0.97, 0.99, 1.02}, 1.0, g), 0.25);
  EXPECT_THROW(estimate_crossover({1.0, 1.0, 1.0, 1.0, 1.0}, 1.0, g, 0.0), std::invalid_argument);
  // |+>^N is an X eigenstate, so <H^dagger H> never reaches F^2 for an X-only perturbation
  OperatorSum hp(3);
  for (std::size_t i = 0; i < 3; ++i) hp.add(0.1, PauliString(1u << i, 0));
  const SpectralTrajectory traj(evolver(parse_operator("X0 X1 + X1 X2", 3)), StateVector::plus_state(3));
  EXPECT_EQ(estimate_crossover(hp, traj, TimeGrid::uniform(3.0, 6)), 3.0);
}

TEST(Baselines, OrthogonalTerms) {
  const Baselines one = baseline_bounds(op("-0.3*Y2", 3), 2.0);
  EXPECT_NEAR(one.haar, 0.6, 1e-15);
  EXPECT_NEAR(one.worst, 0.6, 1e-12);
  OperatorSum sx(5);
  for (std::size_t i = 0; i < 5; ++i) sx.add(0.2, PauliString(1u << i, 0));
  const Baselines b = baseline_bounds(sx, 1.5);
  EXPECT_NEAR(b.worst, 5 * 0.2 * 1.5, 1e-12);
  EXPECT_NEAR(b.haar, std::sqrt(5.0) * 0.2 * 1.5, 1e-12);
  const Baselines z = baseline_bounds(OperatorSum(2), 1.0);
  EXPECT_EQ(z.haar, 0.0);
  EXPECT_EQ(z.worst, 0.0);
  const Baselines mixed = baseline_bounds(build_qimf_1d(4), 1.0);
  EXPECT_LE(mixed.haar, mixed.worst);
  EXPECT_NEAR(mixed.worst, spectral_norm(to_dense(build_qimf_1d(4))), 1e-10);
}

TEST(SegmentedBound, ConstantPerturbationRecoversEntanglementBound) {
  const OperatorSum h0 = build_qimf_1d(4);
  const PerturbationRealization r = sample(standard_qimf_noise(4, 0.1, 0.01), 3);
  const SpectralTrajectory traj(evolver(h0), StateVector::basis_state(4, 0));
  QuadratureOptions o;
  o.rel_tol = 1e-7;
  o.max_level = 12;
  const auto eb = entanglement_bound(r.h_pert, traj, TimeGrid::uniform(1.0, 5), o);
  const SegmentedBound sb = segmented_td_bound(r.h_pert, traj, 1.0, 5, o);
  EXPECT_NEAR(sb.value, eb.back(), 1e-6 * eb.back());
  EXPECT_NEAR(sb.frobenius_part, frobenius_norm(r.h_pert), 1e-9);
  EXPECT_EQ(sb.segment_values.size(), 5u);
  EXPECT_THROW(segmented_td_bound(r.h_pert, traj, 1.0, 0), std::invalid_argument);
}

TEST(SegmentedBound, CauchySchwarzForModulatedPauli) {
  // f(t) = cos(3t) on X0 with a trajectory whose marginal on site 0 is maximally mixed
  OperatorSum hp(2);
  hp.add(0.5, PauliString(1, 0), Envelope::cosine(3.0));
  CVector bell = CVector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const SpectralTrajectory traj(evolver(OperatorSum(2)), StateVector::full(bell));
  const double T = 2.0;
  const SegmentedBound sb = segmented_td_bound(hp, traj, T, 8);
  // int_0^T |0.5 cos 3t| dt
  double absint = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) absint += std::abs(0.5 * std::cos(3.0 * (i + 0.5) * T / n)) * T / n;
  EXPECT_GE(sb.value, absint);
  EXPECT_NEAR(sb.entanglement_part, 0.0, 1e-6);
}

TEST(DisorderBound, Components) {
  const OperatorSum h0 = build_qimf_1d(4);
  const TimeGrid g = TimeGrid::uniform(1.0, 5);
  const SpectralTrajectory traj(evolver(h0), StateVector::basis_state(4, 0));
  const DisorderTraceBound only_dis = disorder_trace_bound(standard_qimf_noise(4, 0.1, 0.0), traj, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(only_dis.value[i], 2 * g.points[i] * std::sqrt(4 * 0.01), 1e-14);
  }
  const PerturbationModel imp = standard_qimf_noise(4, 0.0, 0.02);
  const DisorderTraceBound only_imp = disorder_trace_bound(imp, traj, g);
  const auto ib = integral_bound(imp.imperfection_operator(), traj, g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(only_imp.value[i], 2 * ib[i], 1e-12);

  PerturbationModel bad = standard_qimf_noise(4, 0.1, 0.0);
  bad.disorder[0].op = parse_operator("X0 + Z1", 4);
  EXPECT_THROW(disorder_trace_bound(bad, traj, g), std::invalid_argument);
}

TEST(Ensemble, ZeroNoiseAndBoundChain) {
  const std::size_t N = 4;
  const OperatorSum h0 = build_qimf_1d(N);
  const CVector psi0 = StateVector::basis_state(N, 0).amplitudes();
  EnsembleOptions eo;
  eo.n_samples = 50;
  eo.bootstrap = 50;
  const std::vector<double> times{0.5, 1.0, 2.0};
  for (const auto& p : ensemble_trace_distance(h0, standard_qimf_noise(N, 0.0, 0.0), psi0, times, eo)) {
    // the Gram square root leaves a sqrt(eps) floor
    EXPECT_NEAR(p.distance, 0.0, 1e-7);
  }
  const PerturbationModel m = standard_qimf_noise(N, 0.1, 0.01);
  const auto pts = ensemble_trace_distance(h0, m, psi0, times, eo);
  TimeGrid g;
  g.points = {0.0, 0.5, 1.0, 2.0};
  const DisorderTraceBound b = disorder_trace_bound(m, SpectralTrajectory(evolver(h0), StateVector::full(psi0)), g);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_LE(pts[i].distance, b.value[i + 1] + 3 * pts[i].stderr_);
    EXPECT_LE(pts[i].distance, 2 * pts[i].mean_exact_error + 1e-12);
    EXPECT_GT(pts[i].stderr_, 0.0);
  }
  eo.threads = 2;
  const auto again = ensemble_trace_distance(h0, m, psi0, times, eo);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(again[i].distance, pts[i].distance);
}

TEST(Coherent, TrivialCases) {
  const CMatrix u0 = expm_hermitian(to_dense(build_qimf_1d(3)), 0.7);
  Rng rng(3);
  const CVector psi = haar_state(8, rng);
  const CoherentBound z = coherent_error_bound(u0, op("X0 + X1", 3), 0.0, psi);
  EXPECT_EQ(z.exact, 0.0);
  EXPECT_EQ(z.bound, 0.0);
  const double lam = 0.05;
  const CoherentBound p = coherent_error_bound(u0, op("Y1", 3), lam, psi);
  EXPECT_NEAR(p.exact, 2 * std::abs(std::sin(lam / 2)), 1e-12);
  EXPECT_NEAR(p.bound, lam, 1e-15);
  EXPECT_TRUE(p.first_order_regime);
  EXPECT_FALSE(coherent_error_bound(u0, op("Y1", 3), 0.5, psi).first_order_regime);
}

TEST(Coherent, MaximallyEntangledAndRandomStates) {
  const double lam = 1e-3;
  OperatorSum e(8);
  for (std::size_t i = 0; i < 4; ++i) e.add(1.0, PauliString(1u << i, 0));
  const CMatrix u0 = expm_hermitian(to_dense(build_qimf_1d(8)), 0.3);
  const CoherentBound me = coherent_error_bound(u0, e, lam, max_entangled(4));
  EXPECT_NEAR(me.exact, lam * frobenius_norm(e), 0.05 * lam * frobenius_norm(e));
  EXPECT_NEAR(frobenius_norm(e), 2.0, 1e-15);
  EXPECT_NEAR(me.bound, lam * 2.0, 1e-9);

  OperatorSum e4(4);
  for (std::size_t i = 0; i < 4; ++i) e4.add(1.0, PauliString(1u << i, 0));
  const CMatrix v0 = expm_hermitian(to_dense(build_qimf_1d(4)), 1.1);
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const CoherentBound c = coherent_error_bound(v0, e4, lam, haar_state(16, rng));
    ASSERT_LE(c.exact, c.bound) << k;
  }
}
