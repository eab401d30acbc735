#pragma once

#include <string>
#include <vector>

#include "resilience/dynamics.hpp"
#include "resilience/envelope.hpp"
#include "resilience/operator_sum.hpp"
#include "resilience/state.hpp"

namespace resilience {

struct TimeGrid;

// Frequencies are quoted in MHz/kHz and time in ns. With angular = true a
// frequency f becomes 2 pi f rad/ns, otherwise f cycles/ns is used as a rate.
struct UnitConvention {
  bool angular = true;
  double mhz(double f) const;
  double khz(double f) const { return mhz(f * 1e-3); }
};

// Reads a pulse table CSV (amplitudes in MHz, durations in ns).
std::vector<PulseParams> load_pulse_table(const std::string& path, const UnitConvention& units);
std::string default_pulse_table_path();
const PulseParams& find_pulse(const std::vector<PulseParams>& table, const std::string& label);

struct Lattice {
  std::size_t rows;
  std::size_t cols;
  std::size_t size() const { return rows * cols; }
  std::size_t index(std::size_t r, std::size_t c) const { return r * cols + c; }
  std::vector<std::size_t> neighbors(std::size_t site) const;
};

struct ControlParams {
  double delta_ez = 0.0;   // Zeeman splitting difference
  double j = 0.0;          // exchange during the single-qubit gate
  double delta = 0.0;      // spectator detuning
  double epsilon = 0.0;    // relative amplitude error
  double j_residue = 0.0;  // residual exchange for the two-qubit gate
  double j_gate = 0.0;     // two-qubit exchange
  double gate_time = 0.0;  // two-qubit gate duration
};

// Local register ordering: targets first (in the given order), then the
// spectators in increasing lattice index.
class ControlScenario {
 public:
  ControlScenario(Lattice lattice, std::vector<std::size_t> targets, ControlParams params);

  const Lattice& lattice() const { return lattice_; }
  const std::vector<std::size_t>& targets() const { return targets_; }
  const std::vector<std::size_t>& spectators() const { return spectators_; }
  const ControlParams& params() const { return params_; }
  std::size_t local_sites() const { return targets_.size() + spectators_.size(); }

  double theta() const;              // arctan(J / (2 dE_z))
  double dressed_splitting() const;  // sqrt(J^2 + dE_z^2)

  static ControlScenario single_qubit_default(const UnitConvention& units);
  static ControlScenario two_qubit_default(const UnitConvention& units, double gate_time_ns);

 private:
  Lattice lattice_;
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> spectators_;
  ControlParams params_;
};

struct ScenarioHamiltonians {
  OperatorSum ideal;
  OperatorSum pert;
};

ScenarioHamiltonians build_single_qubit_scenario(const ControlScenario& s, const PulseParams& p);
ScenarioHamiltonians build_two_qubit_scenario(const ControlScenario& s);

struct GibbsSweep {
  std::vector<double> temperatures;
  std::size_t n_a = 0;   // R_k plus targets
  std::size_t n_b1 = 0;  // purifying partner
  std::size_t n_b2 = 0;  // idle qubits in |0>
  std::vector<std::size_t> entropy_sites;  // subset of A reported as entropy; empty = all of A

  static std::vector<double> default_temperatures();  // 1/t, t = 0.008, 0.016, ..., 0.48
  OperatorSum base_hamiltonian() const;               // -sum_{i in A} Z_i
  void validate() const;
};

// sum_i e^{-eps_i/T} |phi_i>_A |phi_i^*>_B1 |0..0>_B2, normalized.
StateVector purified_gibbs(double temperature, const GibbsSweep& sweep);

struct SweepRow {
  double temperature;
  double entropy_bits;
  double error;
};

std::vector<SweepRow> gate_error_sweep(const CMatrix& u, const CMatrix& u0, const GibbsSweep& sweep);
std::vector<SweepRow> gate_error_sweep(const ScenarioHamiltonians& h, double gate_time,
                                       const GibbsSweep& sweep, const EvolutionConfig& cfg);

struct ErrorDistance {
  std::vector<std::string> labels;
  std::vector<double> times;
  std::vector<std::vector<double>> curves;  // ||r_mu(t)|| [channel][time]
  double distance = 0.0;
  double refinement_change = 0.0;  // relative change of D on the last step halving
  std::size_t substeps = 0;
};

ErrorDistance error_distance(const ScenarioHamiltonians& h, const TimeGrid& grid,
                             const EvolutionConfig& cfg, double rel_tol = 1e-2);
// Pauli-frame coefficients r_nu = Tr(sigma_nu R) / 2^n over all 4^n strings.
std::vector<cplx> pauli_coefficients(const CMatrix& r);

}  // namespace resilience
