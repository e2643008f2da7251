#include "kamosc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kamosc/kernels.hpp"

// Fortran LAPACK entry points (liblapack; no C wrapper library installed).
extern "C" {
void dsterf_(int* n, double* d, double* e, int* info);
void dsyev_(const char* jobz, const char* uplo, int* n, double* a, int* lda, double* w,
            double* work, int* lwork, int* info);
void zgesv_(int* n, int* nrhs, std::complex<double>* a, int* lda, int* ipiv,
            std::complex<double>* b, int* ldb, int* info);
}

namespace kamosc {

CMat CMat::identity(int n) {
  CMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

RMat RMat::identity(int n) {
  RMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMat matmul(const CMat& A, const CMat& B) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: dimension mismatch");
  CMat C(A.rows, B.cols);
  kernels::zgemm_acc(A.a.data(), B.a.data(), C.a.data(), A.rows, A.cols, B.cols);
  return C;
}

RMat matmul(const RMat& A, const RMat& B) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: dimension mismatch");
  RMat C(A.rows, B.cols);
  kernels::dgemm_acc(A.a.data(), B.a.data(), C.a.data(), A.rows, A.cols, B.cols);
  return C;
}

CMat transpose(const CMat& A) {
  CMat T(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

void add_scaled(CMat& Y, cplx alpha, const CMat& X) {
  if (Y.rows != X.rows || Y.cols != X.cols)
    throw std::invalid_argument("add_scaled: dimension mismatch");
  kernels::zaxpy(alpha, X.a.data(), Y.a.data(), X.a.size());
}

CMat operator+(const CMat& A, const CMat& B) {
  CMat C = A;
  add_scaled(C, 1.0, B);
  return C;
}

CMat operator-(const CMat& A, const CMat& B) {
  CMat C = A;
  add_scaled(C, -1.0, B);
  return C;
}

CMat operator*(cplx s, const CMat& A) {
  CMat C(A.rows, A.cols);
  kernels::zaxpy(s, A.a.data(), C.a.data(), A.a.size());
  return C;
}

std::vector<cplx> matvec(const CMat& A, std::span<const cplx> x) {
  if (A.cols != static_cast<int>(x.size()))
    throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<cplx> y(A.rows);
  kernels::zgemm_acc(A.a.data(), x.data(), y.data(), A.rows, A.cols, 1);
  return y;
}

double max_abs(const CMat& A) {
  double m = 0.0;
  for (const cplx& v : A.a) m = std::max(m, std::abs(v));
  return m;
}

double one_norm(const CMat& A) {
  double m = 0.0;
  for (int j = 0; j < A.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < A.rows; ++i) s += std::abs(A(i, j));
    m = std::max(m, s);
  }
  return m;
}

double max_abs_offdiag_symmetry_defect(const CMat& A) {
  double m = 0.0;
  for (int i = 0; i < A.rows; ++i)
    for (int j = i + 1; j < A.cols; ++j) m = std::max(m, std::abs(A(i, j) - A(j, i)));
  return m;
}

CMat solve(const CMat& A, const CMat& B) {
  if (A.rows != A.cols || A.rows != B.rows) throw std::invalid_argument("solve: shape");
  int n = A.rows, nrhs = B.cols, info = 0;
  // LAPACK is column-major: pass A^T and B^T, read back X^T.
  CMat At = transpose(A);
  CMat Bt = transpose(B);
  std::vector<int> ipiv(n);
  zgesv_(&n, &nrhs, At.a.data(), &n, ipiv.data(), Bt.a.data(), &n, &info);
  if (info != 0) throw std::runtime_error("zgesv failed, info=" + std::to_string(info));
  return transpose(Bt);
}

CMat inverse(const CMat& A) { return solve(A, CMat::identity(A.rows)); }

namespace {

// Diagonal Pade approximant coefficients for exp (Higham 2005).
constexpr double kPade13[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                              1187353796428800.0,  129060195264000.0,   10559470521600.0,
                              670442572800.0,      33522128640.0,       1323241920.0,
                              40840800.0,          960960.0,            16380.0,
                              182.0,               1.0};

CMat pade13(const CMat& A) {
  const int n = A.rows;
  const CMat I = CMat::identity(n);
  CMat A2 = matmul(A, A);
  CMat A4 = matmul(A2, A2);
  CMat A6 = matmul(A2, A4);
  const double* b = kPade13;

  CMat W1 = b[13] * A6 + b[11] * A4 + b[9] * A2;
  CMat W2 = b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I;
  CMat U = matmul(A, matmul(A6, W1) + W2);

  CMat Z1 = b[12] * A6 + b[10] * A4 + b[8] * A2;
  CMat V = matmul(A6, Z1) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

  return solve(V - U, V + U);
}

}  // namespace

CMat expm(const CMat& A) {
  if (A.rows != A.cols) throw std::invalid_argument("expm: square matrix required");
  const double theta13 = 5.371920351148152;
  double nrm = one_norm(A);
  int s = 0;
  CMat As = A;
  if (nrm > theta13) {
    s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    const double scale = std::ldexp(1.0, -s);
    for (cplx& v : As.a) v *= scale;
  }
  CMat E = pade13(As);
  for (int i = 0; i < s; ++i) E = matmul(E, E);
  return E;
}

void sym_eig(const RMat& A, std::vector<double>& evals, RMat& evecs) {
  if (A.rows != A.cols) throw std::invalid_argument("sym_eig: square matrix required");
  int n = A.rows, info = 0, lwork = -1;
  // Symmetric input, so row-major vs column-major does not matter on entry.
  RMat work_mat = A;
  evals.assign(n, 0.0);
  double wkopt = 0.0;
  dsyev_("V", "U", &n, work_mat.a.data(), &n, evals.data(), &wkopt, &lwork, &info);
  lwork = static_cast<int>(wkopt);
  std::vector<double> work(std::max(lwork, 1));
  dsyev_("V", "U", &n, work_mat.a.data(), &n, evals.data(), work.data(), &lwork, &info);
  if (info != 0) throw std::runtime_error("dsyev failed, info=" + std::to_string(info));
  // Column-major eigenvector matrix: LAPACK column k is contiguous with stride 1 at
  // offset k*n, which in our row-major view is row k. Copy straight across.
  evecs = RMat(n, n);
  std::copy(work_mat.a.begin(), work_mat.a.end(), evecs.a.begin());
}

std::vector<double> tridiag_eigenvalues(std::vector<double> diag, std::vector<double> off) {
  int n = static_cast<int>(diag.size()), info = 0;
  if (static_cast<int>(off.size()) != std::max(n - 1, 0))
    throw std::invalid_argument("tridiag_eigenvalues: off-diagonal size");
  if (n == 0) return {};
  dsterf_(&n, diag.data(), off.data(), &info);
  if (info != 0) throw std::runtime_error("dsterf failed, info=" + std::to_string(info));
  return diag;
}

}  // namespace kamosc
