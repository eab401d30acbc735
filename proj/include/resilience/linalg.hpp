#pragma once

#include <complex>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace resilience {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using RSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Eigendecomposition of a Hermitian matrix. When the input has no imaginary
// part the real symmetric driver is used and `real_vectors` is filled;
// otherwise `vectors` holds the complex eigenvectors.
struct HermitianEigen {
  RVector values;
  bool is_real = false;
  RMatrix real_vectors;
  CMatrix vectors;

  CMatrix complex_vectors() const;
  // V diag(f(values)) V^dagger applied to a vector, without forming the matrix.
  CVector rotate_in(const CVector& v) const;   // V^dagger v
  CVector rotate_out(const CVector& c) const;  // V c
};

HermitianEigen eigh(const CMatrix& h);
HermitianEigen eigh(const RMatrix& h);
RVector eigvalsh(const CMatrix& h);

double spectral_norm(const CMatrix& m);
bool is_hermitian(const CMatrix& m, double tol);
bool is_unitary(const CMatrix& m, double tol);

// exp(-i h t) for Hermitian h.
CMatrix expm_hermitian(const CMatrix& h, double t);

}  // namespace resilience
