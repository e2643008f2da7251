#pragma once

#include <complex>
#include <span>
#include <vector>

namespace kamosc {

using cplx = std::complex<double>;

/// Dense row-major complex matrix.
struct CMat {
  int rows = 0, cols = 0;
  std::vector<cplx> a;

  CMat() = default;
  CMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
  static CMat identity(int n);

  cplx& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const cplx& operator()(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }
};

/// Dense row-major real matrix.
struct RMat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  RMat() = default;
  RMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}
  static RMat identity(int n);

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const double& operator()(int i, int j) const {
    return a[static_cast<std::size_t>(i) * cols + j];
  }
};

CMat matmul(const CMat& A, const CMat& B);
RMat matmul(const RMat& A, const RMat& B);
CMat transpose(const CMat& A);
void add_scaled(CMat& Y, cplx alpha, const CMat& X);  // Y += alpha X
CMat operator+(const CMat& A, const CMat& B);
CMat operator-(const CMat& A, const CMat& B);
CMat operator*(cplx s, const CMat& A);
std::vector<cplx> matvec(const CMat& A, std::span<const cplx> x);

double max_abs(const CMat& A);
double one_norm(const CMat& A);
double max_abs_offdiag_symmetry_defect(const CMat& A);  // max |A - A^T|

/// exp(A) by scaling-and-squaring with diagonal Pade approximants.
CMat expm(const CMat& A);

/// Solve A X = B (complex, general). Returns X; throws on singular A.
CMat solve(const CMat& A, const CMat& B);
CMat inverse(const CMat& A);

/// Eigen-decomposition of a real symmetric matrix (ascending eigenvalues).
/// On return evecs row k holds the k-th eigenvector.
void sym_eig(const RMat& A, std::vector<double>& evals, RMat& evecs);

/// Eigenvalues of a symmetric tridiagonal matrix (ascending).
std::vector<double> tridiag_eigenvalues(std::vector<double> diag, std::vector<double> off);

}  // namespace kamosc
