#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "resilience/dynamics.hpp"
#include "resilience/operator_sum.hpp"
#include "resilience/perturbation.hpp"
#include "resilience/state.hpp"

namespace resilience {

enum class QuadratureRule { Trapezoid, Midpoint };

struct TimeGrid {
  std::vector<double> points;
  QuadratureRule rule = QuadratureRule::Trapezoid;

  static TimeGrid uniform(double t_final, std::size_t intervals,
                          QuadratureRule rule = QuadratureRule::Trapezoid);
  void validate() const;
  double final_time() const { return points.back(); }
  std::size_t size() const { return points.size(); }
};

struct QuadratureOptions {
  double rel_tol = 1e-4;
  double abs_tol = 1e-14;
  int max_level = 8;  // up to 2^max_level sub-intervals per grid interval
};

// Cumulative integrals of several integrands sharing evaluation points,
// refined globally until every interval increment is stable to rel_tol.
struct CumulativeIntegrals {
  std::vector<std::vector<double>> values;  // [function][grid point]
  int level = 0;  // deepest refinement any interval needed
};

CumulativeIntegrals integrate_on_grid(const std::function<std::vector<double>(double)>& f,
                                      std::size_t n_functions, const TimeGrid& grid,
                                      const QuadratureOptions& opts = {});

double exact_error(const CMatrix& u0, const CMatrix& u, const CVector& psi);
double exact_error(const CVector& ideal, const CVector& noisy);

// Delta = sum_S ||A_S|| sqrt(max(0, 2 |S| ln 2 - 2 S(rho_S))) over the
// identity-free terms of A grouped by exact support S. Partial-trace index
// maps are cached per support, so one evaluator serves a whole trajectory.
class DeltaEvaluator {
 public:
  explicit DeltaEvaluator(std::size_t n_sites) : n_sites_(n_sites) {}

  struct Group {
    std::uint64_t mask;
    double norm;
  };
  static std::vector<Group> groups(const OperatorSum& a);

  double operator()(const std::vector<Group>& groups, const CVector& psi) const;
  double operator()(const OperatorSum& a, const CVector& psi) const;
  // Entropy (nats) of the marginal of psi on `mask`.
  double marginal_entropy(std::uint64_t mask, const CVector& psi) const;

 private:
  const PartialTrace& trace_for(std::uint64_t mask) const;
  std::size_t n_sites_;
  mutable std::map<std::uint64_t, std::unique_ptr<PartialTrace>> cache_;
};

double entanglement_delta(const OperatorSum& a, const CVector& psi);
// Tr(A)/d
double trace_term(const OperatorSum& a);

// Ladder series on a grid; each vector has one entry per grid point.
struct LadderSeries {
  std::vector<double> integral;       // int_0^t ||H psi||
  std::vector<double> entanglement;   // t F + int_0^t sqrt(Delta)
  std::vector<double> expectation;    // <H^dagger H> at grid points
  double frobenius = 0.0;
  int quadrature_level = 0;
};

LadderSeries ladder_series(const OperatorSum& h_pert, const Trajectory& traj, const TimeGrid& grid,
                           const QuadratureOptions& opts = {});

std::vector<double> integral_bound(const OperatorSum& h_pert, const Trajectory& traj,
                                   const TimeGrid& grid, const QuadratureOptions& opts = {});
std::vector<double> entanglement_bound(const OperatorSum& h_pert, const Trajectory& traj,
                                       const TimeGrid& grid, const QuadratureOptions& opts = {});
// int_0^{min(t,c)} sqrt(<H^dagger H>) + max(t - c, 0) F at each grid point.
std::vector<double> split_bound(const LadderSeries& series, const TimeGrid& grid, double c);
std::vector<double> split_bound(const OperatorSum& h_pert, const Trajectory& traj,
                                const TimeGrid& grid, double c, const QuadratureOptions& opts = {});
double estimate_crossover(const std::vector<double>& expectation, double frobenius,
                          const TimeGrid& grid, double rel_tol = 0.05);
double estimate_crossover(const OperatorSum& h_pert, const Trajectory& traj, const TimeGrid& grid,
                          double rel_tol = 0.05);

struct Baselines {
  double haar;
  double worst;
};
Baselines baseline_bounds(const OperatorSum& h_pert, double t);

struct SegmentedBound {
  double value;
  double frobenius_part;     // sqrt(dt) sum_j sqrt(Tr(A_j)/d)
  double entanglement_part;  // sum_j int sqrt(Delta)
  std::vector<double> segment_values;
};
SegmentedBound segmented_td_bound(const OperatorSum& h_pert, const Trajectory& traj, double t_final,
                                  std::size_t segments, const QuadratureOptions& opts = {});

struct DisorderTraceBound {
  std::vector<double> value;
  std::vector<double> disorder_part;      // 2 t sqrt(sum sigma^2)
  std::vector<double> imperfection_part;  // 2 int ||N psi||
};
DisorderTraceBound disorder_trace_bound(const PerturbationModel& model, const Trajectory& traj,
                                        const TimeGrid& grid, const QuadratureOptions& opts = {});

struct EnsembleOptions {
  std::size_t n_samples = 200;
  std::uint64_t seed = 0;
  std::size_t bootstrap = 200;
  unsigned threads = 1;
};
struct EnsemblePoint {
  double time;
  double distance;
  double stderr_;
  double mean_exact_error;
};
std::vector<EnsemblePoint> ensemble_trace_distance(const OperatorSum& h0,
                                                   const PerturbationModel& model,
                                                   const CVector& psi0,
                                                   const std::vector<double>& times,
                                                   const EnsembleOptions& opts);

struct CoherentBound {
  double exact;
  double bound;
  bool first_order_regime;  // lambda ||E|| <= 0.1
};
CoherentBound coherent_error_bound(const CMatrix& u0, const OperatorSum& e, double lambda,
                                   const CVector& psi);

}  // namespace resilience
