#include "resilience/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace resilience {

void EvolutionConfig::validate() const {
  if (method == EvolutionMethod::Stepped && !(dt > 0.0)) {
    throw std::invalid_argument("EvolutionConfig: dt must be positive for stepped evolution");
  }
  if (!(tolerance > 0.0)) throw std::invalid_argument("EvolutionConfig: tolerance must be positive");
}

SpectralEvolver::SpectralEvolver(const CMatrix& h) {
  if (!is_hermitian(h, 1e-10)) throw std::invalid_argument("evolve: Hamiltonian is not Hermitian");
  eig_ = eigh(h);
}

SpectralEvolver::SpectralEvolver(const RMatrix& h) {
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("evolve: Hamiltonian is not symmetric");
  }
  eig_ = eigh(h);
}

CVector SpectralEvolver::from_eigenbasis(const CVector& c, double t) const {
  CVector phased(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    phased(i) = c(i) * std::exp(cplx(0.0, -eig_.values(i) * t));
  }
  return eig_.rotate_out(phased);
}

CVector SpectralEvolver::evolve(const CVector& psi0, double t) const {
  return from_eigenbasis(to_eigenbasis(psi0), t);
}

CMatrix SpectralEvolver::propagator(double t) const {
  const CMatrix v = eig_.complex_vectors();
  CVector phases(eig_.values.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::exp(cplx(0.0, -eig_.values(i) * t));
  return v * phases.asDiagonal() * v.adjoint();
}

StateVector evolve_const(const OperatorSum& h, const StateVector& psi0, double t) {
  if (!h.is_time_independent()) throw std::invalid_argument("evolve_const: operator has envelopes");
  if (!h.is_hermitian()) throw std::invalid_argument("evolve_const: operator is not Hermitian");
  if (psi0.is_sector()) {
    return evolve_const(project_to_sector(h, *psi0.sector()), psi0, t);
  }
  if (h.n_sites() != psi0.n_sites()) throw std::invalid_argument("evolve_const: register mismatch");
  return evolve_const(to_dense(h), psi0, t);
}

StateVector evolve_const(const CMatrix& h, const StateVector& psi0, double t) {
  if (h.rows() != psi0.amplitudes().size()) throw std::invalid_argument("evolve_const: dimension mismatch");
  const SpectralEvolver ev(h);
  CVector out = ev.evolve(psi0.amplitudes(), t);
  if (psi0.is_sector()) return StateVector::in_sector(std::move(out), psi0.sector());
  return StateVector::full(std::move(out));
}

CMatrix step_block(const OperatorSum& h, const CMatrix& psi, double t0, double t1, std::size_t steps,
                   StepperOrder order) {
  if (steps == 0) throw std::invalid_argument("step_block: zero steps");
  const double dt = (t1 - t0) / static_cast<double>(steps);
  CMatrix out = psi;
  if (dt == 0.0) return out;
  // Two-point Gauss-Legendre nodes for the fourth-order Magnus step.
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
  const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
  const cplx comm_scale(0.0, -std::sqrt(3.0) * dt * dt / 12.0);
  const bool constant = h.is_time_independent();
  CMatrix hconst;
  CMatrix u_const;
  if (constant) {
    hconst = to_dense(h);
    u_const = expm_hermitian(hconst, dt);
  }
  for (std::size_t k = 0; k < steps; ++k) {
    if (constant) {
      out = u_const * out;
      continue;
    }
    const double t = t0 + static_cast<double>(k) * dt;
    if (order == StepperOrder::Midpoint) {
      out = expm_hermitian(to_dense(h, t + 0.5 * dt), dt) * out;
    } else {
      const CMatrix h1 = to_dense(h, t + c1 * dt);
      const CMatrix h2 = to_dense(h, t + c2 * dt);
      // exp(-i K) with K = dt/2 (H1 + H2) - i sqrt(3) dt^2/12 [H2, H1].
      CMatrix k_eff = 0.5 * dt * (h1 + h2) + comm_scale * (h2 * h1 - h1 * h2);
      k_eff = 0.5 * (k_eff + k_eff.adjoint());
      out = expm_hermitian(k_eff, 1.0) * out;
    }
  }
  return out;
}

CMatrix evolve_td_block(const OperatorSum& h, const CMatrix& psi, double t0, double t1,
                        const EvolutionConfig& cfg) {
  cfg.validate();
  if (t1 < t0) throw std::invalid_argument("evolve_td: t_final precedes t0");
  if (t1 > h.max_time() * (1 + 1e-12)) {
    throw std::invalid_argument("evolve_td: envelopes not evaluable up to t_final");
  }
  if (t1 == t0) return psi;
  if (cfg.method == EvolutionMethod::Eigendecomposition && h.is_time_independent()) {
    return expm_hermitian(to_dense(h), t1 - t0) * psi;
  }
  const double span = t1 - t0;
  std::size_t steps = static_cast<std::size_t>(std::ceil(span / cfg.dt - 1e-9));
  steps = std::max<std::size_t>(steps, 1);
  CMatrix coarse = step_block(h, psi, t0, t1, steps, cfg.order);
  while (true) {
    steps *= 2;
    if (span / static_cast<double>(steps) < cfg.dt_floor) {
      throw NonConvergence(fmt::format("evolve_td: no convergence to {} above dt floor {}",
                                       cfg.tolerance, cfg.dt_floor));
    }
    CMatrix fine = step_block(h, psi, t0, t1, steps, cfg.order);
    const double change = (fine - coarse).colwise().norm().maxCoeff();
    coarse = std::move(fine);
    if (change < cfg.tolerance) return coarse;
  }
}

StateVector evolve_td(const OperatorSum& h, const StateVector& psi0, double t_final,
                      const EvolutionConfig& cfg) {
  if (psi0.is_sector()) throw std::invalid_argument("evolve_td: sector states are not supported");
  const CMatrix out = evolve_td_block(h, psi0.amplitudes(), 0.0, t_final, cfg);
  return StateVector::full(out.col(0));
}

CMatrix propagator(const OperatorSum& h, double t, const EvolutionConfig& cfg) {
  if (h.n_sites() > kDenseCap) throw std::length_error("propagator: dense cap exceeded");
  const Eigen::Index d = Eigen::Index{1} << h.n_sites();
  return evolve_td_block(h, CMatrix::Identity(d, d), 0.0, t, cfg);
}

SpectralTrajectory::SpectralTrajectory(std::shared_ptr<const SpectralEvolver> evolver,
                                       const StateVector& psi0)
    : evolver_(std::move(evolver)), basis_(psi0.sector()), n_sites_(psi0.n_sites()) {
  if (evolver_->dimension() != psi0.amplitudes().size()) {
    throw std::invalid_argument("trajectory: evolver and state dimensions differ");
  }
  coeffs_ = evolver_->to_eigenbasis(psi0.amplitudes());
}

CVector SpectralTrajectory::sector_state(double t) const { return evolver_->from_eigenbasis(coeffs_, t); }

CVector SpectralTrajectory::state(double t) const {
  CVector v = sector_state(t);
  if (basis_) return sector_to_full(v, *basis_);
  return v;
}

SteppedTrajectory::SteppedTrajectory(OperatorSum h, const CVector& psi0, EvolutionConfig cfg)
    : h_(std::move(h)), cfg_(cfg) {
  cfg_.validate();
  cache_.emplace(0.0, psi0);
}

CVector SteppedTrajectory::state(double t) const {
  if (t < 0.0) throw std::invalid_argument("trajectory: negative time");
  auto it = cache_.upper_bound(t);
  --it;
  if (it->first == t) return it->second;
  CVector next = evolve_td_block(h_, it->second, it->first, t, cfg_).col(0);
  cache_.emplace(t, next);
  return next;
}

CVector evolve_sparse(const OperatorSum& h, const CVector& psi, double t, double tol) {
  if (!h.is_time_independent()) throw std::invalid_argument("evolve_sparse: operator has envelopes");
  const OperatorSum hs = h.simplified();
  double scale = 0.0;
  for (const Term& term : hs.terms()) scale += std::abs(term.coefficient);
  if (t == 0.0 || scale == 0.0) return psi;
  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * std::abs(t) * scale)));
  const double tau = t / static_cast<double>(steps);
  const double psi_norm = psi.norm();
  CVector out = psi;
  for (std::size_t s = 0; s < steps; ++s) {
    CVector term = out;
    for (int k = 1; k < 64; ++k) {
      term = resilience::apply(hs, term) * cplx(0.0, -tau / k);
      out += term;
      if (term.norm() <= tol * psi_norm) break;
    }
  }
  return out;
}

CVector evolve_sparse(const RSparse& h, const CVector& psi, double t, double tol) {
  if (h.rows() != psi.size()) throw std::invalid_argument("evolve_sparse: dimension mismatch");
  double scale = 0.0;
  for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
    double row = 0.0;
    for (RSparse::InnerIterator it(h, r); it; ++it) row += std::abs(it.value());
    scale = std::max(scale, row);
  }
  if (t == 0.0 || scale == 0.0) return psi;
  const std::size_t steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * std::abs(t) * scale)));
  const double tau = t / static_cast<double>(steps);
  const double psi_norm = psi.norm();
  // columns hold real and imaginary parts so the product stays real
  RMatrix out(psi.size(), 2);
  out.col(0) = psi.real();
  out.col(1) = psi.imag();
  RMatrix term(psi.size(), 2), next(psi.size(), 2);
  for (std::size_t s = 0; s < steps; ++s) {
    term = out;
    for (int k = 1; k < 64; ++k) {
      next.noalias() = h * term;
      const double f = tau / k;
      // (a + ib)(-i f) = f b - i f a
      term.col(0) = f * next.col(1);
      term.col(1) = -f * next.col(0);
      out += term;
      if (term.norm() <= tol * psi_norm) break;
    }
  }
  CVector res(psi.size());
  res.real() = out.col(0);
  res.imag() = out.col(1);
  return res;
}

SparseTrajectory::SparseTrajectory(OperatorSum h, const CVector& psi0, std::size_t max_cache)
    : h_(h.simplified()), max_cache_(max_cache) {
  if (!h_.is_time_independent()) throw std::invalid_argument("trajectory: operator has envelopes");
  cache_.emplace(0.0, psi0);
  cursor_ = psi0;
}

namespace {

// Steps from the latest known state at or before t: the nearest cached entry
// or the most recent result, whichever is later.
template <class Step>
CVector cached_step(std::map<double, CVector>& cache, std::size_t max_cache, double& cursor_t,
                    CVector& cursor, double t, Step step) {
  if (t < 0.0) throw std::invalid_argument("trajectory: negative time");
  auto it = cache.upper_bound(t);
  --it;
  if (it->first == t) return it->second;
  const bool from_cursor = cursor_t <= t && cursor_t > it->first;
  CVector next = from_cursor ? step(cursor, t - cursor_t) : step(it->second, t - it->first);
  if (cache.size() < max_cache) cache.emplace(t, next);
  cursor_t = t;
  cursor = next;
  return next;
}

}  // namespace

CVector SparseTrajectory::state(double t) const {
  return cached_step(cache_, max_cache_, cursor_t_, cursor_, t,
                     [&](const CVector& v, double dt) { return evolve_sparse(h_, v, dt); });
}

SectorTrajectory::SectorTrajectory(RSparse h, std::shared_ptr<const SectorBasis> basis,
                                   const CVector& psi0, std::size_t max_cache)
    : h_(std::move(h)), basis_(std::move(basis)), max_cache_(max_cache) {
  if (!basis_ || static_cast<std::size_t>(psi0.size()) != basis_->dimension() ||
      h_.rows() != psi0.size() || h_.cols() != psi0.size()) {
    throw std::invalid_argument("SectorTrajectory: dimension mismatch");
  }
  cache_.emplace(0.0, psi0);
  cursor_ = psi0;
}

std::size_t SectorTrajectory::n_sites() const { return 2 * basis_->L(); }

CVector SectorTrajectory::sector_state(double t) const {
  return cached_step(cache_, max_cache_, cursor_t_, cursor_, t,
                     [&](const CVector& v, double dt) { return evolve_sparse(h_, v, dt); });
}

CVector SectorTrajectory::state(double t) const { return sector_to_full(sector_state(t), *basis_); }

}  // namespace resilience
