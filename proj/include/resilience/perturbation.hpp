#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "resilience/operator_sum.hpp"

namespace resilience {

using LatticeEdge = std::pair<std::size_t, std::size_t>;

OperatorSum build_qimf_1d(std::size_t N, double h_x = 0.809, double h_y = 0.9045, double J = 1.0);
OperatorSum build_qimf_2d(std::size_t rows, std::size_t cols, double h_x = 0.809,
                          double h_y = 0.9045, double J = 1.0);
// Open-boundary nearest-neighbour edges, site = r*cols + c.
std::vector<LatticeEdge> grid_edges(std::size_t rows, std::size_t cols);

struct DisorderChannel {
  OperatorSum op;  // unit-coefficient Pauli string
  double sigma;    // standard deviation of delta_k
};

struct ImperfectionChannel {
  OperatorSum op;
  double eta;
};

struct PerturbationModel {
  std::size_t n_sites = 0;
  std::vector<DisorderChannel> disorder;
  std::vector<ImperfectionChannel> imperfection;

  void validate() const;
  double total_variance() const;
  // sum_m eta_m N_m
  OperatorSum imperfection_operator() const;
};

// How a configured noise strength s maps to the Gaussian width.
enum class NoiseScale { Variance, StdDev };
double sigma_from(double strength, NoiseScale scale);

PerturbationModel standard_qimf_noise(std::size_t N, double sigma, double eta);
// Disorder X_i on every site and an eta * sum X_i X_j imperfection over `edges`.
PerturbationModel qimf_noise_on_edges(std::size_t n_sites, const std::vector<LatticeEdge>& edges,
                                      double sigma, double eta);

struct PerturbationRealization {
  std::vector<double> deltas;
  OperatorSum h_pert;
  std::uint64_t seed;
};

// Realization `sample_index` of stream `seed`; draws delta_k = sigma_k * z_k.
PerturbationRealization sample(const PerturbationModel& model, std::uint64_t seed,
                               std::uint64_t sample_index = 0);
OperatorSum compose(const PerturbationModel& model, const std::vector<double>& deltas);

}  // namespace resilience
