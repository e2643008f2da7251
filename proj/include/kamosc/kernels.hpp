#pragma once

#include <complex>
#include <cstddef>
#include <string>

namespace kamosc::kernels {

using cplx = std::complex<double>;

/// C[m x n] += A[m x p] * B[p x n], all row-major, complex double.
void zgemm_acc(const cplx* A, const cplx* B, cplx* C, int m, int p, int n);

/// C[m x n] += A[m x p] * B[p x n], all row-major, real double.
void dgemm_acc(const double* A, const double* B, double* C, int m, int p, int n);

/// y += alpha * x, complex, length len.
void zaxpy(cplx alpha, const cplx* x, cplx* y, std::size_t len);

/// Weighted dot: sum_q w[q] * a[q] * b[q], real.
double wdot(const double* w, const double* a, const double* b, std::size_t len);

/// Name of the backend currently in use ("avx2" or "scalar").
const std::string& active_backend();

/// Select backend explicitly: "scalar", "avx2", or "auto".
/// Throws std::invalid_argument if the backend is unavailable.
void select_backend(const std::string& name);

namespace detail {
struct Backend {
  void (*zgemm_acc)(const cplx*, const cplx*, cplx*, int, int, int);
  void (*dgemm_acc)(const double*, const double*, double*, int, int, int);
  void (*zaxpy)(cplx, const cplx*, cplx*, std::size_t);
  double (*wdot)(const double*, const double*, const double*, std::size_t);
};
extern const Backend scalar_backend;
#ifdef KAMOSC_WITH_AVX2
extern const Backend avx2_backend;
#endif
}  // namespace detail

}  // namespace kamosc::kernels
