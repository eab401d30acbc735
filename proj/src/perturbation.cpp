#include "resilience/perturbation.hpp"

#include <cmath>
#include <stdexcept>

#include "resilience/rng.hpp"

namespace resilience {

std::vector<LatticeEdge> grid_edges(std::size_t rows, std::size_t cols) {
  std::vector<LatticeEdge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) edges.emplace_back(r * cols + c, r * cols + c + 1);
  }
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) edges.emplace_back(r * cols + c, (r + 1) * cols + c);
  }
  return edges;
}

namespace {

OperatorSum qimf_on_edges(std::size_t n, const std::vector<LatticeEdge>& edges, double h_x,
                          double h_y, double J) {
  OperatorSum h(n);
  for (std::size_t i = 0; i < n; ++i) h.add(h_x, PauliString::single(i, Axis::X));
  for (std::size_t i = 0; i < n; ++i) h.add(h_y, PauliString::single(i, Axis::Y));
  for (const auto& [a, b] : edges) {
    h.add(J, PauliString::from_factors({{std::min(a, b), Axis::X}, {std::max(a, b), Axis::X}}));
  }
  return h;
}

}  // namespace

OperatorSum build_qimf_1d(std::size_t N, double h_x, double h_y, double J) {
  if (N < 2) throw std::invalid_argument("build_qimf_1d: N must be at least 2");
  return qimf_on_edges(N, grid_edges(1, N), h_x, h_y, J);
}

OperatorSum build_qimf_2d(std::size_t rows, std::size_t cols, double h_x, double h_y, double J) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("build_qimf_2d: empty lattice");
  if (rows * cols > kDenseCap) throw std::invalid_argument("build_qimf_2d: lattice exceeds dense cap");
  return qimf_on_edges(rows * cols, grid_edges(rows, cols), h_x, h_y, J);
}

void PerturbationModel::validate() const {
  for (const auto& d : disorder) {
    if (d.sigma < 0.0) throw std::invalid_argument("PerturbationModel: negative sigma");
    if (d.op.n_sites() != n_sites) throw std::invalid_argument("PerturbationModel: channel width mismatch");
    if (!d.op.is_hermitian()) throw std::invalid_argument("PerturbationModel: non-Hermitian channel");
  }
  for (const auto& m : imperfection) {
    if (m.op.n_sites() != n_sites) throw std::invalid_argument("PerturbationModel: channel width mismatch");
    if (!m.op.is_hermitian()) throw std::invalid_argument("PerturbationModel: non-Hermitian channel");
  }
}

double PerturbationModel::total_variance() const {
  double v = 0.0;
  for (const auto& d : disorder) v += d.sigma * d.sigma;
  return v;
}

OperatorSum PerturbationModel::imperfection_operator() const {
  OperatorSum out(n_sites);
  for (const auto& m : imperfection) {
    if (m.eta != 0.0) out = out + m.op * cplx(m.eta);
  }
  return out;
}

double sigma_from(double strength, NoiseScale scale) {
  if (strength < 0.0) throw std::invalid_argument("noise strength must be non-negative");
  return scale == NoiseScale::Variance ? std::sqrt(strength) : strength;
}

PerturbationModel qimf_noise_on_edges(std::size_t n_sites, const std::vector<LatticeEdge>& edges,
                                      double sigma, double eta) {
  PerturbationModel m;
  m.n_sites = n_sites;
  for (std::size_t i = 0; i < n_sites; ++i) {
    OperatorSum v(n_sites);
    v.add(1.0, PauliString::single(i, Axis::X));
    m.disorder.push_back({v, sigma});
  }
  OperatorSum coupling(n_sites);
  for (const auto& [a, b] : edges) {
    coupling.add(1.0, PauliString::from_factors({{std::min(a, b), Axis::X}, {std::max(a, b), Axis::X}}));
  }
  m.imperfection.push_back({coupling, eta});
  m.validate();
  return m;
}

PerturbationModel standard_qimf_noise(std::size_t N, double sigma, double eta) {
  if (N < 2) throw std::invalid_argument("standard_qimf_noise: N must be at least 2");
  return qimf_noise_on_edges(N, grid_edges(1, N), sigma, eta);
}

OperatorSum compose(const PerturbationModel& model, const std::vector<double>& deltas) {
  if (deltas.size() != model.disorder.size()) throw std::invalid_argument("compose: delta count mismatch");
  OperatorSum h(model.n_sites);
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (deltas[k] != 0.0) h = h + model.disorder[k].op * cplx(deltas[k]);
  }
  return h + model.imperfection_operator();
}

PerturbationRealization sample(const PerturbationModel& model, std::uint64_t seed,
                               std::uint64_t sample_index) {
  model.validate();
  Rng rng(seed, sample_index);
  std::vector<double> deltas;
  deltas.reserve(model.disorder.size());
  for (const auto& d : model.disorder) {
    const double z = rng.normal();
    deltas.push_back(d.sigma * z);
  }
  return {deltas, compose(model, deltas), seed};
}

}  // namespace resilience
