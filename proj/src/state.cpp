#include "resilience/state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace resilience {

void check_normalized(const CVector& v, double tol) {
  const double n = v.norm();
  if (std::abs(n - 1.0) > tol) {
    throw std::invalid_argument(fmt::format("state norm {} differs from 1", n));
  }
}

namespace {

std::size_t qubits_for(Eigen::Index dim) {
  if (dim <= 0) throw std::invalid_argument("state: empty amplitude vector");
  const auto d = static_cast<std::uint64_t>(dim);
  if (!std::has_single_bit(d)) throw std::invalid_argument("state: dimension is not a power of 2");
  return static_cast<std::size_t>(std::countr_zero(d));
}

}  // namespace

StateVector StateVector::full(CVector amplitudes) {
  const std::size_t n = qubits_for(amplitudes.size());
  check_normalized(amplitudes);
  return StateVector(std::move(amplitudes), n, nullptr);
}

StateVector StateVector::in_sector(CVector amplitudes, std::shared_ptr<const SectorBasis> basis) {
  if (!basis) throw std::invalid_argument("state: null sector basis");
  if (static_cast<std::size_t>(amplitudes.size()) != basis->dimension()) {
    throw std::invalid_argument("state: amplitude count does not match the sector dimension");
  }
  check_normalized(amplitudes);
  const std::size_t n = 2 * basis->L();
  return StateVector(std::move(amplitudes), n, std::move(basis));
}

StateVector StateVector::basis_state(std::size_t n_sites, std::uint64_t index) {
  if (n_sites == 0 || n_sites > 30) throw std::invalid_argument("basis_state: bad register size");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(std::uint64_t{1} << n_sites));
  if (index >= static_cast<std::uint64_t>(v.size())) throw std::invalid_argument("basis_state: index out of range");
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return full(std::move(v));
}

StateVector StateVector::plus_state(std::size_t n_sites) {
  return product_state(std::string(n_sites, '+'));
}

StateVector StateVector::product_state(const std::string& spec) {
  if (spec.empty() || spec.size() > 30) throw std::invalid_argument("product_state: bad length");
  CVector v = CVector::Ones(1);
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    Eigen::Vector2cd local;
    switch (spec[i]) {
      case '0': local << 1.0, 0.0; break;
      case '1': local << 0.0, 1.0; break;
      case '+': local << r, r; break;
      case '-': local << r, -r; break;
      default: throw std::invalid_argument(fmt::format("product_state: bad symbol '{}'", spec[i]));
    }
    // Site i is bit i, so it becomes the slowest index of the new vector.
    CVector next(v.size() * 2);
    next.head(v.size()) = local(0) * v;
    next.tail(v.size()) = local(1) * v;
    v = std::move(next);
  }
  return full(std::move(v));
}

CVector StateVector::full_amplitudes() const {
  if (!basis_) return amps_;
  return sector_to_full(amps_, *basis_);
}

PartialTrace::PartialTrace(std::size_t n_sites, std::vector<std::size_t> keep)
    : n_(n_sites), keep_(std::move(keep)), keep_mask_(0) {
  std::sort(keep_.begin(), keep_.end());
  if (std::adjacent_find(keep_.begin(), keep_.end()) != keep_.end()) {
    throw std::invalid_argument("partial trace: repeated site");
  }
  for (std::size_t s : keep_) {
    if (s >= n_) throw std::invalid_argument(fmt::format("partial trace: site {} out of range", s));
    keep_mask_ |= std::uint64_t{1} << s;
  }
  if (n_ > 30) throw std::invalid_argument("partial trace: register too large");
  const std::uint64_t dim = std::uint64_t{1} << n_;
  const std::uint64_t rest = (dim - 1) & ~keep_mask_;
  row_.resize(dim);
  col_.resize(dim);
  for (std::uint64_t b = 0; b < dim; ++b) {
    row_[b] = static_cast<std::uint32_t>(extract_bits(b, keep_mask_));
    col_[b] = static_cast<std::uint32_t>(extract_bits(b, rest));
  }
}

CMatrix PartialTrace::operator()(const CVector& psi) const {
  const std::uint64_t dim = std::uint64_t{1} << n_;
  if (static_cast<std::uint64_t>(psi.size()) != dim) {
    throw std::invalid_argument("partial trace: state dimension mismatch");
  }
  const Eigen::Index dk = Eigen::Index{1} << keep_.size();
  const Eigen::Index dr = static_cast<Eigen::Index>(dim) / dk;
  CMatrix m(dk, dr);
  for (std::uint64_t b = 0; b < dim; ++b) m(row_[b], col_[b]) = psi(static_cast<Eigen::Index>(b));
  CMatrix rho(dk, dk);
  rho.noalias() = m * m.adjoint();
  return rho;
}

ReducedDensityMatrix reduced_density(const CVector& psi, std::size_t n_sites,
                                     const std::vector<std::size_t>& keep) {
  PartialTrace pt(n_sites, keep);
  return {pt.kept(), pt(psi)};
}

ReducedDensityMatrix reduced_density(const StateVector& psi, const std::vector<std::size_t>& keep) {
  return reduced_density(psi.full_amplitudes(), psi.n_sites(), keep);
}

double entropy(const CMatrix& rho, EntropyUnits units) {
  const RVector ev = eigvalsh(rho);
  double s = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double l = ev(i);
    if (l < -1e-10) {
      throw std::invalid_argument(fmt::format("entropy: eigenvalue {} is negative", l));
    }
    if (l > 1e-12) s -= l * std::log(l);
  }
  s = std::max(s, 0.0);
  return units == EntropyUnits::Bits ? s / std::log(2.0) : s;
}

double entropy(const ReducedDensityMatrix& rho, EntropyUnits units) {
  return entropy(rho.rho, units);
}

void write_state_fixture(const std::string& stem, const CVector& v) {
  std::ofstream csv(stem + ".csv");
  if (!csv) throw std::runtime_error("cannot write " + stem + ".csv");
  csv << "index,re,im\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    csv << fmt::format("{},{:.17e},{:.17e}\n", i, v(i).real(), v(i).imag());
  }
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + stem + ".bin");
  const std::uint64_t n = static_cast<std::uint64_t>(v.size());
  bin.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = v(i).real(), im = v(i).imag();
    bin.write(reinterpret_cast<const char*>(&re), sizeof re);
    bin.write(reinterpret_cast<const char*>(&im), sizeof im);
  }
}

CVector read_state_fixture_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "index,re,im") throw std::runtime_error(path + ": bad header");
  std::vector<cplx> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    if (std::stoul(a) != vals.size()) throw std::runtime_error(path + ": indices out of order");
    vals.emplace_back(std::stod(b), std::stod(c));
  }
  return Eigen::Map<CVector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

CVector read_state_fixture_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  CVector v(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    double re = 0, im = 0;
    in.read(reinterpret_cast<char*>(&re), sizeof re);
    in.read(reinterpret_cast<char*>(&im), sizeof im);
    v(static_cast<Eigen::Index>(i)) = cplx(re, im);
  }
  if (!in) throw std::runtime_error(path + ": truncated");
  return v;
}

}  // namespace resilience
