#include "resilience/linalg.hpp"

#include <lapacke.h>

#include <stdexcept>
#include <string>

namespace resilience {

namespace {

// Below this size Eigen's own solver beats the LAPACK call overhead.
constexpr Eigen::Index kSmallDim = 48;

bool has_imaginary_part(const CMatrix& h) {
  return h.imag().cwiseAbs().maxCoeff() > 0.0;
}

}  // namespace

CMatrix HermitianEigen::complex_vectors() const {
  if (is_real) return real_vectors.cast<cplx>();
  return vectors;
}

CVector HermitianEigen::rotate_in(const CVector& v) const {
  if (is_real) {
    CVector out(v.size());
    out.real() = real_vectors.transpose() * v.real();
    out.imag() = real_vectors.transpose() * v.imag();
    return out;
  }
  return vectors.adjoint() * v;
}

CVector HermitianEigen::rotate_out(const CVector& c) const {
  if (is_real) {
    CVector out(c.size());
    out.real() = real_vectors * c.real();
    out.imag() = real_vectors * c.imag();
    return out;
  }
  return vectors * c;
}

HermitianEigen eigh(const RMatrix& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("eigh: matrix is not square");
  HermitianEigen out;
  out.is_real = true;
  const Eigen::Index n = h.rows();
  if (n == 0) return out;
  if (n <= kSmallDim) {
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(h);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigh: solver failed");
    out.values = solver.eigenvalues();
    out.real_vectors = solver.eigenvectors();
    return out;
  }
  out.real_vectors = h;
  out.values.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                                         out.real_vectors.data(), static_cast<lapack_int>(n),
                                         out.values.data());
  if (info != 0) throw std::runtime_error("eigh: dsyevd failed with info " + std::to_string(info));
  return out;
}

HermitianEigen eigh(const CMatrix& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("eigh: matrix is not square");
  if (!has_imaginary_part(h)) return eigh(RMatrix(h.real()));
  HermitianEigen out;
  const Eigen::Index n = h.rows();
  if (n <= kSmallDim) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigh: solver failed");
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();
    return out;
  }
  out.vectors = h;
  out.values.resize(n);
  const lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
      reinterpret_cast<lapack_complex_double*>(out.vectors.data()), static_cast<lapack_int>(n),
      out.values.data());
  if (info != 0) throw std::runtime_error("eigh: zheevd failed with info " + std::to_string(info));
  return out;
}

RVector eigvalsh(const CMatrix& h) {
  if (h.rows() <= kSmallDim) {
    if (!has_imaginary_part(h)) {
      return Eigen::SelfAdjointEigenSolver<RMatrix>(h.real(), Eigen::EigenvaluesOnly).eigenvalues();
    }
    return Eigen::SelfAdjointEigenSolver<CMatrix>(h, Eigen::EigenvaluesOnly).eigenvalues();
  }
  CMatrix work = h;
  RVector values(h.rows());
  const lapack_int n = static_cast<lapack_int>(h.rows());
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                         reinterpret_cast<lapack_complex_double*>(work.data()), n,
                                         values.data());
  if (info != 0) throw std::runtime_error("eigvalsh: zheevd failed with info " + std::to_string(info));
  return values;
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (is_hermitian(m, 1e-12)) return eigvalsh(m).cwiseAbs().maxCoeff();
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const CMatrix defect = m.adjoint() * m - CMatrix::Identity(m.rows(), m.cols());
  return defect.cwiseAbs().maxCoeff() <= tol;
}

CMatrix expm_hermitian(const CMatrix& h, double t) {
  const HermitianEigen e = eigh(h);
  const CMatrix v = e.complex_vectors();
  CVector phases(e.values.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::exp(cplx(0.0, -e.values(i) * t));
  return v * phases.asDiagonal() * v.adjoint();
}

}  // namespace resilience
