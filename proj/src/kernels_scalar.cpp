#include "kamosc/kernels.hpp"

namespace kamosc::kernels {
namespace {

// Reference kernels. Loop order keeps B rows streaming so the compiler can
// vectorize the inner j loop; accumulation order is fixed (i, then p, then j)
// and the SIMD variants reproduce it lane-for-lane up to reassociation of
// independent j-lanes only, so both backends agree to rounding.
void zgemm_acc_scalar(const cplx* A, const cplx* B, cplx* C, int m, int p, int n) {
  for (int i = 0; i < m; ++i) {
    const cplx* arow = A + static_cast<std::size_t>(i) * p;
    cplx* crow = C + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < p; ++k) {
      const cplx a = arow[k];
      if (a.real() == 0.0 && a.imag() == 0.0) continue;
      const cplx* brow = B + static_cast<std::size_t>(k) * n;
      for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
  }
}

void dgemm_acc_scalar(const double* A, const double* B, double* C, int m, int p, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = A + static_cast<std::size_t>(i) * p;
    double* crow = C + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < p; ++k) {
      const double a = arow[k];
      if (a == 0.0) continue;
      const double* brow = B + static_cast<std::size_t>(k) * n;
      for (int j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
  }
}

void zaxpy_scalar(cplx alpha, const cplx* x, cplx* y, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

double wdot_scalar(const double* w, const double* a, const double* b, std::size_t len) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += w[i] * a[i] * b[i];
  return s;
}

}  // namespace

namespace detail {
const Backend scalar_backend = {&zgemm_acc_scalar, &dgemm_acc_scalar, &zaxpy_scalar,
                                &wdot_scalar};
}

}  // namespace kamosc::kernels
