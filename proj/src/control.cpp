#include "resilience/control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "resilience/bounds.hpp"

namespace resilience {

double UnitConvention::mhz(double f) const {
  return (angular ? 2.0 * std::numbers::pi : 1.0) * f * 1e-3;
}

std::string default_pulse_table_path() { return std::string(RESILIENCE_DATA_DIR) + "/rcp_pulses_v1.csv"; }

std::vector<PulseParams> load_pulse_table(const std::string& path, const UnitConvention& units) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read pulse table " + path);
  std::vector<PulseParams> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != 14) throw std::runtime_error(fmt::format("{}: expected 14 columns, got {}", path, cells.size()));
    PulseParams p;
    p.label = cells[0];
    p.amplitude = units.mhz(std::stod(cells[1]));
    p.duration = std::stod(cells[2]);
    for (int i = 0; i < 6; ++i) p.a[i] = std::stod(cells[3 + i]);
    for (int i = 0; i < 5; ++i) p.phi[i] = std::stod(cells[9 + i]);
    p.validate();
    out.push_back(p);
  }
  if (out.empty()) throw std::runtime_error(path + ": no pulses");
  return out;
}

const PulseParams& find_pulse(const std::vector<PulseParams>& table, const std::string& label) {
  for (const auto& p : table) {
    if (p.label == label) return p;
  }
  throw std::invalid_argument("unknown pulse label " + label);
}

std::vector<std::size_t> Lattice::neighbors(std::size_t site) const {
  if (site >= size()) throw std::invalid_argument("Lattice: site out of range");
  const std::size_t r = site / cols, c = site % cols;
  std::vector<std::size_t> out;
  if (r > 0) out.push_back(index(r - 1, c));
  if (c > 0) out.push_back(index(r, c - 1));
  if (c + 1 < cols) out.push_back(index(r, c + 1));
  if (r + 1 < rows) out.push_back(index(r + 1, c));
  return out;
}

ControlScenario::ControlScenario(Lattice lattice, std::vector<std::size_t> targets, ControlParams params)
    : lattice_(lattice), targets_(std::move(targets)), params_(params) {
  if (targets_.empty()) throw std::invalid_argument("ControlScenario: no target sites");
  std::set<std::size_t> t(targets_.begin(), targets_.end());
  if (t.size() != targets_.size()) throw std::invalid_argument("ControlScenario: repeated target");
  std::set<std::size_t> spect;
  for (std::size_t k : targets_) {
    for (std::size_t n : lattice_.neighbors(k)) {
      if (!t.count(n)) spect.insert(n);
    }
  }
  spectators_.assign(spect.begin(), spect.end());
  if (params_.delta_ez == 0.0 && params_.j != 0.0) {
    throw std::invalid_argument("ControlScenario: J without a Zeeman splitting difference");
  }
}

double ControlScenario::theta() const {
  if (params_.delta_ez == 0.0) return 0.0;
  return std::atan(params_.j / (2.0 * params_.delta_ez));
}

double ControlScenario::dressed_splitting() const {
  return std::hypot(params_.j, params_.delta_ez);
}

ControlScenario ControlScenario::single_qubit_default(const UnitConvention& units) {
  ControlParams p;
  p.delta_ez = units.mhz(200.0);
  p.j = units.khz(100.0);
  p.delta = units.khz(50.0);
  p.epsilon = 0.001;
  const Lattice lat{3, 4};
  return ControlScenario(lat, {lat.index(1, 1)}, p);
}

ControlScenario ControlScenario::two_qubit_default(const UnitConvention& units, double gate_time_ns) {
  ControlParams p;
  // "J = 10 pi MHz" is an angular value, i.e. 5 MHz as a cyclic frequency.
  p.j_gate = units.mhz(5.0);
  p.delta = units.khz(100.0);
  p.j_residue = units.khz(100.0);
  p.gate_time = gate_time_ns;
  const Lattice lat{3, 4};
  return ControlScenario(lat, {lat.index(1, 1), lat.index(1, 2)}, p);
}

ScenarioHamiltonians build_single_qubit_scenario(const ControlScenario& s, const PulseParams& p) {
  if (s.targets().size() != 1) throw std::invalid_argument("single-qubit scenario needs one target");
  const std::size_t n = s.local_sites();
  const std::size_t m = s.spectators().size();
  const ControlParams& c = s.params();
  const Envelope omega = Envelope::rcp(p);
  ScenarioHamiltonians h{OperatorSum(n), OperatorSum(n)};
  h.ideal.add(0.5, PauliString::single(0, Axis::X), omega);

  const double tan_theta = std::tan(s.theta());
  const double w = s.dressed_splitting();
  if (c.delta != 0.0) {
    for (std::size_t i = 1; i <= m; ++i) h.pert.add(c.delta, PauliString::single(i, Axis::Z));
  }
  if (c.epsilon != 0.0) h.pert.add(c.epsilon, PauliString::single(0, Axis::X), omega);
  if (c.j != 0.0) {
    for (std::size_t i = 1; i <= m; ++i) {
      h.pert.add(0.25 * c.j, PauliString::from_factors({{0, Axis::Z}, {i, Axis::Z}}));
    }
  }
  if (tan_theta != 0.0) {
    for (std::size_t i = 1; i <= m; ++i) {
      h.pert.add(0.5 * tan_theta, PauliString::from_factors({{0, Axis::Z}, {i, Axis::X}}),
                 omega * Envelope::cosine(w));
      h.pert.add(-0.5 * tan_theta, PauliString::from_factors({{0, Axis::Z}, {i, Axis::Y}}),
                 omega * Envelope::sine(w));
    }
  }
  return h;
}

ScenarioHamiltonians build_two_qubit_scenario(const ControlScenario& s) {
  if (s.targets().size() != 2) throw std::invalid_argument("two-qubit scenario needs two targets");
  const std::size_t n = s.local_sites();
  const ControlParams& c = s.params();
  ScenarioHamiltonians h{OperatorSum(n), OperatorSum(n)};
  h.ideal.add(0.25 * c.j_gate, PauliString::from_factors({{0, Axis::Z}, {1, Axis::Z}}));
  if (c.delta != 0.0) {
    for (std::size_t j = 0; j < n; ++j) h.pert.add(c.delta, PauliString::single(j, Axis::Z));
  }
  if (c.j_residue != 0.0) {
    for (std::size_t i = 2; i < n; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        h.pert.add(0.25 * c.j_residue, PauliString::from_factors({{j, Axis::Z}, {i, Axis::Z}}));
      }
    }
  }
  return h;
}

std::vector<double> GibbsSweep::default_temperatures() {
  std::vector<double> out;
  for (int k = 1; k <= 60; ++k) out.push_back(1.0 / (0.008 * k));
  std::sort(out.begin(), out.end());
  return out;
}

OperatorSum GibbsSweep::base_hamiltonian() const {
  OperatorSum v(n_a);
  for (std::size_t i = 0; i < n_a; ++i) v.add(-1.0, PauliString::single(i, Axis::Z));
  return v;
}

void GibbsSweep::validate() const {
  if (n_a == 0) throw std::invalid_argument("GibbsSweep: empty subsystem A");
  if (n_b1 != n_a) throw std::invalid_argument("GibbsSweep: B1 must mirror A");
  if (n_a + n_b1 + n_b2 > 20) throw std::invalid_argument("GibbsSweep: register too large");
  for (double t : temperatures) {
    if (!(t > 0.0)) throw std::invalid_argument("GibbsSweep: temperatures must be positive");
  }
  for (std::size_t s : entropy_sites) {
    if (s >= n_a) throw std::invalid_argument("GibbsSweep: entropy site outside A");
  }
}

StateVector purified_gibbs(double temperature, const GibbsSweep& sweep) {
  sweep.validate();
  if (!(temperature > 0.0)) throw std::invalid_argument("purified_gibbs: temperature must be positive");
  const HermitianEigen e = eigh(to_dense(sweep.base_hamiltonian()));
  const CMatrix phi = e.complex_vectors();
  const double e0 = e.values.minCoeff();
  RVector w(e.values.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::exp(-(e.values(i) - e0) / temperature);
  // amp(a, b) = sum_i w_i phi_i(a) conj(phi_i(b)), with b indexing B1.
  const CMatrix amp = phi * w.asDiagonal() * phi.adjoint();
  const std::size_t n = sweep.n_a + sweep.n_b1 + sweep.n_b2;
  CVector psi = CVector::Zero(Eigen::Index{1} << n);
  const Eigen::Index da = amp.rows();
  for (Eigen::Index b = 0; b < da; ++b) {
    for (Eigen::Index a = 0; a < da; ++a) psi(a + (b << sweep.n_a)) = amp(a, b);
  }
  psi /= psi.norm();
  return StateVector::full(std::move(psi));
}

std::vector<SweepRow> gate_error_sweep(const CMatrix& u, const CMatrix& u0, const GibbsSweep& sweep) {
  sweep.validate();
  const Eigen::Index da = Eigen::Index{1} << sweep.n_a;
  if (u.rows() != da || u0.rows() != da) throw std::invalid_argument("gate_error_sweep: propagators do not act on A");
  const CMatrix diff = u - u0;
  const CMatrix m = diff.adjoint() * diff;
  const std::size_t n = sweep.n_a + sweep.n_b1 + sweep.n_b2;
  std::vector<std::size_t> a_sites(sweep.n_a);
  for (std::size_t i = 0; i < sweep.n_a; ++i) a_sites[i] = i;
  const PartialTrace trace_a(n, a_sites);
  const std::vector<std::size_t> ent_sites = sweep.entropy_sites.empty() ? a_sites : sweep.entropy_sites;
  const PartialTrace trace_e(n, ent_sites);
  std::vector<SweepRow> rows;
  for (double temp : sweep.temperatures) {
    const CVector psi = purified_gibbs(temp, sweep).amplitudes();
    const CMatrix rho_a = trace_a(psi);
    const double val = (m * rho_a).trace().real();
    const double s = entropy(trace_e(psi), EntropyUnits::Bits);
    rows.push_back({temp, s, std::sqrt(std::max(0.0, val))});
  }
  return rows;
}

std::vector<SweepRow> gate_error_sweep(const ScenarioHamiltonians& h, double gate_time,
                                       const GibbsSweep& sweep, const EvolutionConfig& cfg) {
  const CMatrix u0 = propagator(h.ideal, gate_time, cfg);
  const CMatrix u = propagator(h.ideal + h.pert, gate_time, cfg);
  return gate_error_sweep(u, u0, sweep);
}

std::vector<cplx> pauli_coefficients(const CMatrix& r) {
  const Eigen::Index d = r.rows();
  const std::size_t n = static_cast<std::size_t>(std::log2(static_cast<double>(d)));
  if (n > 6) throw std::length_error("pauli_coefficients: Pauli-frame dimension cap (6 sites) exceeded");
  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<cplx> out;
  out.reserve(dim * dim);
  for (std::uint64_t z = 0; z < dim; ++z) {
    for (std::uint64_t x = 0; x < dim; ++x) {
      const PauliString p(x, z);
      cplx tr = 0.0;
      for (std::uint64_t c = 0; c < dim; ++c) {
        tr += p.phase(c) * r(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c ^ x));
      }
      out.push_back(tr / static_cast<double>(dim));
    }
  }
  return out;
}

namespace {

struct DistanceRun {
  std::vector<std::vector<double>> curves;
  double distance;
};

DistanceRun distance_at(const ScenarioHamiltonians& h, const TimeGrid& grid,
                        const EvolutionConfig& cfg, std::size_t sub) {
  const std::size_t n = h.ideal.n_sites();
  const Eigen::Index d = Eigen::Index{1} << n;
  const auto& terms = h.pert.terms();
  std::vector<OperatorSum> channels;
  for (const Term& t : terms) channels.push_back(OperatorSum(n, {t}));
  std::vector<CMatrix> acc(channels.size(), CMatrix::Zero(d, d));
  std::vector<CMatrix> prev(channels.size());
  DistanceRun run{std::vector<std::vector<double>>(channels.size()), 0.0};

  CMatrix u0 = CMatrix::Identity(d, d);
  auto frame = [&](std::size_t mu, double t) {
    return CMatrix(u0.adjoint() * to_dense(channels[mu], t) * u0);
  };
  for (std::size_t mu = 0; mu < channels.size(); ++mu) {
    prev[mu] = frame(mu, grid.points[0]);
    run.curves[mu].push_back(0.0);
  }
  for (std::size_t i = 0; i + 1 < grid.points.size(); ++i) {
    const double a = grid.points[i], b = grid.points[i + 1];
    const double step = (b - a) / static_cast<double>(sub);
    for (std::size_t k = 1; k <= sub; ++k) {
      const double t0 = a + static_cast<double>(k - 1) * step;
      const double t1 = k == sub ? b : a + static_cast<double>(k) * step;
      u0 = evolve_td_block(h.ideal, u0, t0, t1, cfg);
      for (std::size_t mu = 0; mu < channels.size(); ++mu) {
        CMatrix cur = frame(mu, t1);
        acc[mu] += 0.5 * (t1 - t0) * (prev[mu] + cur);
        prev[mu] = std::move(cur);
      }
    }
    for (std::size_t mu = 0; mu < channels.size(); ++mu) {
      double s = 0.0;
      for (const cplx& c : pauli_coefficients(acc[mu])) s += std::norm(c);
      run.curves[mu].push_back(std::sqrt(s));
    }
  }
  for (const auto& c : run.curves) run.distance += c.back();
  return run;
}

}  // namespace

ErrorDistance error_distance(const ScenarioHamiltonians& h, const TimeGrid& grid,
                             const EvolutionConfig& cfg, double rel_tol) {
  grid.validate();
  if (h.ideal.n_sites() > 6) throw std::length_error("error_distance: Pauli-frame dimension cap (6 sites) exceeded");
  ErrorDistance out;
  for (const Term& t : h.pert.terms()) {
    out.labels.push_back(t.pauli.str() + (t.envelope.is_constant() ? "" : " " + t.envelope.str()));
  }
  out.times = grid.points;
  std::size_t sub = 2;
  DistanceRun coarse = distance_at(h, grid, cfg, sub);
  for (int level = 0; level < 7; ++level) {
    DistanceRun fine = distance_at(h, grid, cfg, 2 * sub);
    const double change = fine.distance == 0.0 ? 0.0 : std::abs(fine.distance - coarse.distance) / fine.distance;
    sub *= 2;
    coarse = std::move(fine);
    if (change < rel_tol) {
      out.curves = std::move(coarse.curves);
      out.distance = coarse.distance;
      out.refinement_change = change;
      out.substeps = sub;
      return out;
    }
  }
  throw NonConvergence("error_distance: integration did not converge");
}

}  // namespace resilience
