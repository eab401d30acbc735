#include "resilience/bounds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "resilience/rng.hpp"

namespace resilience {

TimeGrid TimeGrid::uniform(double t_final, std::size_t intervals, QuadratureRule rule) {
  if (intervals == 0 || !(t_final > 0.0)) throw std::invalid_argument("TimeGrid: bad uniform grid");
  TimeGrid g;
  g.rule = rule;
  for (std::size_t i = 0; i <= intervals; ++i) {
    g.points.push_back(t_final * static_cast<double>(i) / static_cast<double>(intervals));
  }
  return g;
}

void TimeGrid::validate() const {
  if (points.size() < 2) throw std::invalid_argument("TimeGrid: need at least 2 points");
  if (points.front() != 0.0) throw std::invalid_argument("TimeGrid: must start at 0");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i] > points[i - 1])) throw std::invalid_argument("TimeGrid: points must increase");
  }
}

CumulativeIntegrals integrate_on_grid(const std::function<std::vector<double>(double)>& f,
                                      std::size_t n_functions, const TimeGrid& grid,
                                      const QuadratureOptions& opts) {
  grid.validate();
  const std::size_t n_int = grid.points.size() - 1;
  auto eval = [&](double t) {
    std::vector<double> v = f(t);
    if (v.size() != n_functions) throw std::logic_error("integrate_on_grid: integrand width mismatch");
    return v;
  };
  const bool trapezoid = grid.rule == QuadratureRule::Trapezoid;

  // Each interval is refined until its own increment is stable; trapezoid
  // keeps nodes across levels. Levels sweep t upward so trajectories step forward.
  std::vector<std::vector<std::vector<double>>> samples(n_int);
  std::vector<std::vector<double>> inc(n_int, std::vector<double>(n_functions, 0.0));
  auto increment = [&](std::size_t i, int level) {
    const std::size_t sub = std::size_t{1} << level;
    const double a = grid.points[i], b = grid.points[i + 1];
    const double h = (b - a) / static_cast<double>(sub);
    std::vector<double> acc(n_functions, 0.0);
    if (trapezoid) {
      std::vector<std::vector<double>> next(sub + 1);
      if (level == 0) {
        next[0] = (i > 0 && !samples[i - 1].empty()) ? samples[i - 1].back() : eval(a);
        next[1] = eval(b);
      } else {
        for (std::size_t k = 0; k <= sub; ++k) {
          next[k] = (k % 2 == 0) ? std::move(samples[i][k / 2]) : eval(a + static_cast<double>(k) * h);
        }
      }
      samples[i] = std::move(next);
      for (std::size_t k = 0; k <= sub; ++k) {
        const double w = (k == 0 || k == sub) ? 0.5 : 1.0;
        for (std::size_t q = 0; q < n_functions; ++q) acc[q] += w * samples[i][k][q];
      }
    } else {
      for (std::size_t k = 0; k < sub; ++k) {
        const auto v = eval(a + (static_cast<double>(k) + 0.5) * h);
        for (std::size_t q = 0; q < n_functions; ++q) acc[q] += v[q];
      }
    }
    for (double& x : acc) x *= h;
    return acc;
  };

  for (std::size_t i = 0; i < n_int; ++i) inc[i] = increment(i, 0);
  std::vector<bool> done(n_int, false);
  std::size_t open = n_int;
  int reached = 0;
  for (int level = 1; level <= opts.max_level && open > 0; ++level) {
    reached = level;
    for (std::size_t i = 0; i < n_int; ++i) {
      if (done[i]) continue;
      std::vector<double> cur = increment(i, level);
      bool ok = true;
      for (std::size_t q = 0; q < n_functions && ok; ++q) {
        ok = std::abs(cur[q] - inc[i][q]) <= opts.rel_tol * std::abs(cur[q]) + opts.abs_tol;
      }
      inc[i] = std::move(cur);
      if (ok) {
        done[i] = true;
        --open;
        if (trapezoid && i + 1 < n_int) samples[i] = {samples[i].back()};
      }
    }
  }
  if (open > 0) {
    throw NonConvergence(fmt::format("quadrature did not reach relative tolerance {} within {} levels",
                                     opts.rel_tol, opts.max_level));
  }
  CumulativeIntegrals result;
  result.values.assign(n_functions, std::vector<double>(n_int + 1, 0.0));
  for (std::size_t q = 0; q < n_functions; ++q) {
    for (std::size_t i = 0; i < n_int; ++i) result.values[q][i + 1] = result.values[q][i] + inc[i][q];
  }
  result.level = reached;
  return result;
}

double exact_error(const CMatrix& u0, const CMatrix& u, const CVector& psi) {
  if (u0.rows() != u.rows() || u0.cols() != u.cols() || u.cols() != psi.size()) {
    throw std::invalid_argument("exact_error: dimension mismatch");
  }
  return ((u0 - u) * psi).norm();
}

double exact_error(const CVector& ideal, const CVector& noisy) {
  if (ideal.size() != noisy.size()) throw std::invalid_argument("exact_error: dimension mismatch");
  return (ideal - noisy).norm();
}

std::vector<DeltaEvaluator::Group> DeltaEvaluator::groups(const OperatorSum& a) {
  if (!a.is_time_independent()) throw std::invalid_argument("entanglement_delta: evaluate envelopes first");
  std::map<std::uint64_t, OperatorSum> by_support;
  const OperatorSum simple = a.simplified(1e-300);
  for (const Term& t : simple.terms()) {
    if (t.pauli.is_identity()) continue;
    const std::uint64_t mask = t.pauli.support_bits();
    auto it = by_support.find(mask);
    if (it == by_support.end()) it = by_support.emplace(mask, OperatorSum(a.n_sites())).first;
    it->second.add(t.coefficient, t.pauli);
  }
  std::vector<Group> out;
  out.reserve(by_support.size());
  for (const auto& [mask, op] : by_support) {
    const CMatrix local = to_dense(restrict_to(op, mask));
    out.push_back({mask, spectral_norm(local)});
  }
  return out;
}

const PartialTrace& DeltaEvaluator::trace_for(std::uint64_t mask) const {
  auto it = cache_.find(mask);
  if (it == cache_.end()) {
    it = cache_.emplace(mask, std::make_unique<PartialTrace>(n_sites_, PauliString(mask, 0).support())).first;
  }
  return *it->second;
}

double DeltaEvaluator::marginal_entropy(std::uint64_t mask, const CVector& psi) const {
  return entropy(trace_for(mask)(psi), EntropyUnits::Nats);
}

double DeltaEvaluator::operator()(const std::vector<Group>& groups, const CVector& psi) const {
  double delta = 0.0;
  for (const Group& g : groups) {
    if (g.norm == 0.0) continue;
    const double ln_d = static_cast<double>(std::popcount(g.mask)) * std::log(2.0);
    const double radicand = 2.0 * ln_d - 2.0 * marginal_entropy(g.mask, psi);
    delta += g.norm * std::sqrt(std::max(0.0, radicand));
  }
  return delta;
}

double DeltaEvaluator::operator()(const OperatorSum& a, const CVector& psi) const {
  return (*this)(groups(a), psi);
}

double entanglement_delta(const OperatorSum& a, const CVector& psi) {
  return DeltaEvaluator(a.n_sites())(a, psi);
}

double trace_term(const OperatorSum& a) { return a.identity_coefficient().real(); }

namespace {

void require_constant(const OperatorSum& h, const char* who) {
  if (!h.is_time_independent()) {
    throw std::invalid_argument(fmt::format("{}: time-dependent perturbation; use segmented_td_bound", who));
  }
}

}  // namespace

LadderSeries ladder_series(const OperatorSum& h_pert, const Trajectory& traj, const TimeGrid& grid,
                           const QuadratureOptions& opts) {
  require_constant(h_pert, "ladder_series");
  if (h_pert.n_sites() != traj.n_sites()) throw std::invalid_argument("ladder_series: register mismatch");
  const OperatorSum h = h_pert.simplified();
  const OperatorSum a = hermitian_square(h);
  const auto groups = DeltaEvaluator::groups(a);
  const DeltaEvaluator delta(h.n_sites());
  LadderSeries out;
  out.frobenius = frobenius_norm(h);
  auto integrand = [&](double t) {
    const CVector psi = traj.state(t);
    const double norm = resilience::apply(h, psi).norm();
    return std::vector<double>{norm, std::sqrt(delta(groups, psi))};
  };
  const CumulativeIntegrals ints = integrate_on_grid(integrand, 2, grid, opts);
  out.quadrature_level = ints.level;
  out.integral = ints.values[0];
  out.entanglement.resize(grid.size());
  out.expectation.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.entanglement[i] = grid.points[i] * out.frobenius + ints.values[1][i];
    out.expectation[i] = resilience::apply(h, traj.state(grid.points[i])).squaredNorm();
  }
  return out;
}

std::vector<double> integral_bound(const OperatorSum& h_pert, const Trajectory& traj,
                                   const TimeGrid& grid, const QuadratureOptions& opts) {
  require_constant(h_pert, "integral_bound");
  const OperatorSum h = h_pert.simplified();
  auto integrand = [&](double t) { return std::vector<double>{resilience::apply(h, traj.state(t)).norm()}; };
  return integrate_on_grid(integrand, 1, grid, opts).values[0];
}

std::vector<double> entanglement_bound(const OperatorSum& h_pert, const Trajectory& traj,
                                       const TimeGrid& grid, const QuadratureOptions& opts) {
  return ladder_series(h_pert, traj, grid, opts).entanglement;
}

std::vector<double> split_bound(const LadderSeries& series, const TimeGrid& grid, double c) {
  if (c < grid.points.front() || c > grid.final_time()) {
    throw std::invalid_argument("split_bound: crossover outside the grid");
  }
  // Cumulative integral at c, linear between grid points.
  const auto it = std::lower_bound(grid.points.begin(), grid.points.end(), c);
  const std::size_t hi = static_cast<std::size_t>(it - grid.points.begin());
  double at_c = series.integral[hi];
  if (grid.points[hi] != c) {
    const std::size_t lo = hi - 1;
    const double w = (c - grid.points[lo]) / (grid.points[hi] - grid.points[lo]);
    at_c = (1 - w) * series.integral[lo] + w * series.integral[hi];
  }
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid.points[i];
    out[i] = t <= c ? series.integral[i] : at_c + (t - c) * series.frobenius;
  }
  return out;
}

std::vector<double> split_bound(const OperatorSum& h_pert, const Trajectory& traj,
                                const TimeGrid& grid, double c, const QuadratureOptions& opts) {
  return split_bound(ladder_series(h_pert, traj, grid, opts), grid, c);
}

double estimate_crossover(const std::vector<double>& expectation, double frobenius,
                          const TimeGrid& grid, double rel_tol) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("estimate_crossover: rel_tol must be positive");
  if (expectation.size() != grid.size()) throw std::invalid_argument("estimate_crossover: size mismatch");
  const double f2 = frobenius * frobenius;
  std::size_t first = grid.size();
  for (std::size_t i = grid.size(); i-- > 0;) {
    if (std::abs(expectation[i] - f2) <= rel_tol * f2) first = i;
    else break;
  }
  if (first == grid.size()) return grid.final_time();
  return grid.points[first];
}

double estimate_crossover(const OperatorSum& h_pert, const Trajectory& traj, const TimeGrid& grid,
                          double rel_tol) {
  require_constant(h_pert, "estimate_crossover");
  const OperatorSum h = h_pert.simplified();
  std::vector<double> e;
  for (double t : grid.points) e.push_back(resilience::apply(h, traj.state(t)).squaredNorm());
  return estimate_crossover(e, frobenius_norm(h), grid, rel_tol);
}

Baselines baseline_bounds(const OperatorSum& h_pert, double t) {
  require_constant(h_pert, "baseline_bounds");
  if (h_pert.empty()) return {0.0, 0.0};
  const OperatorNorms n = operator_norms(h_pert);
  return {t * n.frobenius_normalized, t * n.spectral};
}

SegmentedBound segmented_td_bound(const OperatorSum& h_pert, const Trajectory& traj, double t_final,
                                  std::size_t segments, const QuadratureOptions& opts) {
  if (segments == 0) throw std::invalid_argument("segmented_td_bound: J must be at least 1");
  if (!(t_final > 0.0)) throw std::invalid_argument("segmented_td_bound: t_final must be positive");
  const double dt = t_final / static_cast<double>(segments);
  const DeltaEvaluator delta(h_pert.n_sites());
  auto integrand = [&](double t) {
    const OperatorSum h = h_pert.at(t).simplified();
    double f2 = 0.0;
    for (const Term& term : h.terms()) f2 += std::norm(term.coefficient);
    const double d = delta(hermitian_square(h), traj.state(t));
    return std::vector<double>{f2, std::sqrt(d)};
  };
  SegmentedBound out{0.0, 0.0, 0.0, {}};
  for (std::size_t j = 0; j < segments; ++j) {
    const double a = dt * static_cast<double>(j);
    const double b = j + 1 == segments ? t_final : a + dt;
    TimeGrid sub = TimeGrid::uniform(b - a, 4);
    // Shift the local grid onto [a, b].
    auto shifted = [&](double s) { return integrand(a + s); };
    const auto ints = integrate_on_grid(shifted, 2, sub, opts);
    const double frob = std::sqrt(dt) * std::sqrt(std::max(0.0, ints.values[0].back()));
    const double ent = ints.values[1].back();
    out.frobenius_part += frob;
    out.entanglement_part += ent;
    out.segment_values.push_back(frob + ent);
  }
  out.value = out.frobenius_part + out.entanglement_part;
  return out;
}

DisorderTraceBound disorder_trace_bound(const PerturbationModel& model, const Trajectory& traj,
                                        const TimeGrid& grid, const QuadratureOptions& opts) {
  model.validate();
  for (const auto& d : model.disorder) {
    const OperatorSum v = d.op.simplified();
    if (v.size() != 1 || v.terms()[0].coefficient != cplx(1.0) || v.terms()[0].pauli.is_identity()) {
      throw std::invalid_argument("disorder_trace_bound: disorder channels must be unit Pauli strings");
    }
  }
  const double s = std::sqrt(model.total_variance());
  const OperatorSum n = model.imperfection_operator().simplified();
  DisorderTraceBound out;
  std::vector<double> imp(grid.size(), 0.0);
  if (!n.empty()) {
    auto integrand = [&](double t) { return std::vector<double>{resilience::apply(n, traj.state(t)).norm()}; };
    imp = integrate_on_grid(integrand, 1, grid, opts).values[0];
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.disorder_part.push_back(2.0 * grid.points[i] * s);
    out.imperfection_part.push_back(2.0 * imp[i]);
    out.value.push_back(out.disorder_part.back() + out.imperfection_part.back());
  }
  return out;
}

namespace {

// ||Phi W Phi^dagger||_1 from the Gram matrix G = Phi^dagger Phi.
// sqrt of the Gram matrix of the columns; eigenvalues of S W S are those of Phi W Phi^dagger.
CMatrix gram_root(const CMatrix& phi) {
  const Eigen::SelfAdjointEigenSolver<CMatrix> gram(phi.adjoint() * phi);
  const RVector root = gram.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return gram.eigenvectors() * root.asDiagonal() * gram.eigenvectors().adjoint();
}

double weighted_trace_norm(const CMatrix& s, const RVector& w) {
  const CMatrix m = s * w.asDiagonal() * s;
  const CMatrix herm = 0.5 * (m + m.adjoint());
  return eigvalsh(herm).cwiseAbs().sum();
}

}  // namespace

std::vector<EnsemblePoint> ensemble_trace_distance(const OperatorSum& h0,
                                                   const PerturbationModel& model,
                                                   const CVector& psi0,
                                                   const std::vector<double>& times,
                                                   const EnsembleOptions& opts) {
  if (opts.n_samples < 2) throw std::invalid_argument("ensemble_trace_distance: need at least 2 samples");
  check_normalized(psi0);
  const CMatrix h0_dense = to_dense(h0);
  const SpectralEvolver ideal(h0_dense);
  const std::size_t n = opts.n_samples;
  const std::size_t nt = times.size();
  // evolved[s] holds psi_s(t) for every requested time as columns.
  std::vector<CMatrix> evolved(n);
  auto run = [&](std::size_t s) {
    const PerturbationRealization r = sample(model, opts.seed, s);
    const SpectralEvolver noisy(CMatrix(h0_dense + to_dense(r.h_pert)));
    const CVector c = noisy.to_eigenbasis(psi0);
    CMatrix cols(psi0.size(), static_cast<Eigen::Index>(nt));
    for (std::size_t k = 0; k < nt; ++k) cols.col(static_cast<Eigen::Index>(k)) = noisy.from_eigenbasis(c, times[k]);
    evolved[s] = std::move(cols);
  };
  const unsigned threads = std::max(1u, opts.threads);
  if (threads == 1) {
    for (std::size_t s = 0; s < n; ++s) run(s);
  } else {
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < threads; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t s = w; s < n; s += threads) run(s);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  std::vector<EnsemblePoint> out;
  for (std::size_t k = 0; k < nt; ++k) {
    const CVector ideal_t = ideal.evolve(psi0, times[k]);
    CMatrix phi(psi0.size(), static_cast<Eigen::Index>(n + 1));
    phi.col(0) = ideal_t;
    double err = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      phi.col(static_cast<Eigen::Index>(s + 1)) = evolved[s].col(static_cast<Eigen::Index>(k));
      err += (evolved[s].col(static_cast<Eigen::Index>(k)) - ideal_t).norm();
    }
    const CMatrix gram = gram_root(phi);
    RVector w(static_cast<Eigen::Index>(n + 1));
    w(0) = 1.0;
    w.tail(static_cast<Eigen::Index>(n)).setConstant(-1.0 / static_cast<double>(n));
    const double distance = weighted_trace_norm(gram, w);

    Rng rng(opts.seed, 0x426f6f7473747270ULL + k);
    std::vector<double> reps;
    for (std::size_t b = 0; b < opts.bootstrap; ++b) {
      RVector wb = RVector::Zero(static_cast<Eigen::Index>(n + 1));
      wb(0) = 1.0;
      for (std::size_t s = 0; s < n; ++s) wb(static_cast<Eigen::Index>(1 + rng.below(n))) -= 1.0 / static_cast<double>(n);
      reps.push_back(weighted_trace_norm(gram, wb));
    }
    double se = 0.0;
    if (reps.size() > 1) {
      const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / static_cast<double>(reps.size());
      double var = 0.0;
      for (double r : reps) var += (r - mean) * (r - mean);
      se = std::sqrt(var / static_cast<double>(reps.size() - 1));
    }
    out.push_back({times[k], distance, se, err / static_cast<double>(n)});
  }
  return out;
}

CoherentBound coherent_error_bound(const CMatrix& u0, const OperatorSum& e, double lambda,
                                   const CVector& psi) {
  if (!e.is_time_independent() || !e.is_hermitian()) {
    throw std::invalid_argument("coherent_error_bound: E must be constant and Hermitian");
  }
  const Eigen::Index d = Eigen::Index{1} << e.n_sites();
  if (u0.rows() != d || psi.size() != d) throw std::invalid_argument("coherent_error_bound: dimension mismatch");
  if (lambda == 0.0 || e.empty()) return {0.0, 0.0, true};
  const CMatrix e_dense = to_dense(e);
  const CVector kicked = expm_hermitian(e_dense, lambda) * psi;
  const double exact = (u0 * (kicked - psi)).norm();

  const OperatorSum es = e.simplified();
  const DeltaEvaluator ent(e.n_sites());
  double pair_sum = 0.0;
  for (const Term& a : es.terms()) {
    for (const Term& b : es.terms()) {
      const PauliProduct pr = pauli_mul(a.pauli, b.pauli);
      if (pr.product.is_identity()) continue;
      const std::uint64_t mask = a.pauli.support_bits() | b.pauli.support_bits();
      const double ln_d = static_cast<double>(std::popcount(mask)) * std::log(2.0);
      const double radicand = std::max(0.0, 2.0 * ln_d - 2.0 * ent.marginal_entropy(mask, psi));
      pair_sum += std::sqrt(std::abs(a.coefficient * b.coefficient) * std::sqrt(radicand));
    }
  }
  const double bound = lambda * frobenius_norm(es) + lambda * pair_sum;
  const bool regime = lambda * spectral_norm(e_dense) <= 0.1;
  return {exact, bound, regime};
}

}  // namespace resilience
