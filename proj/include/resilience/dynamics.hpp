#pragma once

#include <map>
#include <memory>
#include <stdexcept>

#include "resilience/linalg.hpp"
#include "resilience/operator_sum.hpp"
#include "resilience/state.hpp"

namespace resilience {

enum class EvolutionMethod { Eigendecomposition, Stepped };
enum class StepperOrder { Midpoint, FourthOrder };

struct EvolutionConfig {
  EvolutionMethod method = EvolutionMethod::Eigendecomposition;
  double dt = 0.01;
  StepperOrder order = StepperOrder::Midpoint;
  double tolerance = 1e-8;
  double dt_floor = 1e-6;

  void validate() const;
};

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cached spectral decomposition of a time-independent Hermitian matrix.
class SpectralEvolver {
 public:
  explicit SpectralEvolver(const CMatrix& h);
  explicit SpectralEvolver(const RMatrix& h);

  CVector evolve(const CVector& psi0, double t) const;
  CVector to_eigenbasis(const CVector& psi) const { return eig_.rotate_in(psi); }
  CVector from_eigenbasis(const CVector& c, double t) const;
  CMatrix propagator(double t) const;
  const RVector& energies() const { return eig_.values; }
  Eigen::Index dimension() const { return eig_.values.size(); }

 private:
  HermitianEigen eig_;
};

StateVector evolve_const(const OperatorSum& h, const StateVector& psi0, double t);
// h is a sector matrix when psi0 lives in a sector, otherwise a full-register matrix.
StateVector evolve_const(const CMatrix& h, const StateVector& psi0, double t);

// Time-ordered evolution of every column of psi from t0 to t1, refined until
// halving the step changes the result by less than cfg.tolerance.
CMatrix evolve_td_block(const OperatorSum& h, const CMatrix& psi, double t0, double t1,
                        const EvolutionConfig& cfg);
// One pass of the stepper with a fixed number of steps, no refinement.
CMatrix step_block(const OperatorSum& h, const CMatrix& psi, double t0, double t1, std::size_t steps,
                   StepperOrder order);
StateVector evolve_td(const OperatorSum& h, const StateVector& psi0, double t_final,
                      const EvolutionConfig& cfg);
CMatrix propagator(const OperatorSum& h, double t, const EvolutionConfig& cfg);

// exp(-i h t) psi for a time-independent h from its sparse action alone:
// Taylor series on substeps with t * sum|c| <= 1/2, truncated once a term
// falls below tol. Used where the register is too large to diagonalize.
CVector evolve_sparse(const OperatorSum& h, const CVector& psi, double t, double tol = 1e-15);
// Same scheme for a real symmetric sparse matrix; substeps use the max row sum.
CVector evolve_sparse(const RSparse& h, const CVector& psi, double t, double tol = 1e-15);

// psi(t) along a fixed evolution, as full-register amplitudes.
class Trajectory {
 public:
  virtual ~Trajectory() = default;
  virtual std::size_t n_sites() const = 0;
  virtual CVector state(double t) const = 0;
};

class SpectralTrajectory : public Trajectory {
 public:
  SpectralTrajectory(std::shared_ptr<const SpectralEvolver> evolver, const StateVector& psi0);
  std::size_t n_sites() const override { return n_sites_; }
  CVector state(double t) const override;
  CVector sector_state(double t) const;  // amplitudes in the evolver's own basis

 private:
  std::shared_ptr<const SpectralEvolver> evolver_;
  std::shared_ptr<const SectorBasis> basis_;
  CVector coeffs_;
  std::size_t n_sites_;
};

// Caches states at previously requested times; later requests step forward
// from the nearest earlier cached time. Not thread-safe.
class SteppedTrajectory : public Trajectory {
 public:
  SteppedTrajectory(OperatorSum h, const CVector& psi0, EvolutionConfig cfg);
  std::size_t n_sites() const override { return h_.n_sites(); }
  CVector state(double t) const override;

 private:
  OperatorSum h_;
  EvolutionConfig cfg_;
  mutable std::map<double, CVector> cache_;
};

// Same caching scheme as SteppedTrajectory with evolve_sparse steps; at most
// max_cache states are retained.
class SparseTrajectory : public Trajectory {
 public:
  SparseTrajectory(OperatorSum h, const CVector& psi0, std::size_t max_cache = 2048);
  std::size_t n_sites() const override { return h_.n_sites(); }
  CVector state(double t) const override;

 private:
  OperatorSum h_;
  std::size_t max_cache_;
  mutable std::map<double, CVector> cache_;
  mutable double cursor_t_ = 0.0;
  mutable CVector cursor_;
};

// Sparse stepping inside a particle-number sector; state() embeds into the
// full register. Same caching scheme as SparseTrajectory.
class SectorTrajectory : public Trajectory {
 public:
  SectorTrajectory(RSparse h, std::shared_ptr<const SectorBasis> basis, const CVector& psi0,
                   std::size_t max_cache = 2048);
  std::size_t n_sites() const override;
  CVector state(double t) const override;
  CVector sector_state(double t) const;
  const SectorBasis& basis() const { return *basis_; }

 private:
  RSparse h_;
  std::shared_ptr<const SectorBasis> basis_;
  std::size_t max_cache_;
  mutable std::map<double, CVector> cache_;
  mutable double cursor_t_ = 0.0;
  mutable CVector cursor_;
};

}  // namespace resilience
