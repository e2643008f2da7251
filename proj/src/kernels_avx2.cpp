#include "kamosc/kernels.hpp"

#include <immintrin.h>

namespace kamosc::kernels {
namespace {

// AVX2/FMA kernels, 2 complex (4 doubles) per vector.
//
// Complex scalar-times-vector: with a = ar + i*ai and packed b = [r0,i0,r1,i1],
//   a*b = [ar*r0 - ai*i0, ar*i0 + ai*r0, ...]
// which is fmaddsub(ar, b, ai*swap(b)) with swap exchanging re/im lanes.

inline __m256d cmul_acc(__m256d c, __m256d ar, __m256d ai, __m256d b) {
  __m256d sw = _mm256_permute_pd(b, 0x5);
  return _mm256_add_pd(c, _mm256_fmaddsub_pd(ar, b, _mm256_mul_pd(ai, sw)));
}

void zgemm_acc_avx2(const cplx* A, const cplx* B, cplx* C, int m, int p, int n) {
  const double* Bd = reinterpret_cast<const double*>(B);
  const int n2 = n & ~1;
  for (int i = 0; i < m; ++i) {
    const cplx* arow = A + static_cast<std::size_t>(i) * p;
    double* crow = reinterpret_cast<double*>(C + static_cast<std::size_t>(i) * n);
    for (int k = 0; k < p; ++k) {
      const cplx a = arow[k];
      if (a.real() == 0.0 && a.imag() == 0.0) continue;
      const double* brow = Bd + 2 * static_cast<std::size_t>(k) * n;
      const __m256d ar = _mm256_set1_pd(a.real());
      const __m256d ai = _mm256_set1_pd(a.imag());
      int j = 0;
      for (; j < n2; j += 2) {
        __m256d c = _mm256_loadu_pd(crow + 2 * j);
        c = cmul_acc(c, ar, ai, _mm256_loadu_pd(brow + 2 * j));
        _mm256_storeu_pd(crow + 2 * j, c);
      }
      if (j < n) {
        const cplx b(brow[2 * j], brow[2 * j + 1]);
        const cplx v = a * b;
        crow[2 * j] += v.real();
        crow[2 * j + 1] += v.imag();
      }
    }
  }
}

void dgemm_acc_avx2(const double* A, const double* B, double* C, int m, int p, int n) {
  const int n4 = n & ~3;
  for (int i = 0; i < m; ++i) {
    const double* arow = A + static_cast<std::size_t>(i) * p;
    double* crow = C + static_cast<std::size_t>(i) * n;
    for (int k = 0; k < p; ++k) {
      const double a = arow[k];
      if (a == 0.0) continue;
      const double* brow = B + static_cast<std::size_t>(k) * n;
      const __m256d av = _mm256_set1_pd(a);
      int j = 0;
      for (; j < n4; j += 4) {
        __m256d c = _mm256_loadu_pd(crow + j);
        c = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c);
        _mm256_storeu_pd(crow + j, c);
      }
      for (; j < n; ++j) crow[j] += a * brow[j];
    }
  }
}

void zaxpy_avx2(cplx alpha, const cplx* x, cplx* y, std::size_t len) {
  const double* xd = reinterpret_cast<const double*>(x);
  double* yd = reinterpret_cast<double*>(y);
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  const std::size_t len2 = len & ~std::size_t(1);
  for (; i < len2; i += 2) {
    __m256d c = _mm256_loadu_pd(yd + 2 * i);
    c = cmul_acc(c, ar, ai, _mm256_loadu_pd(xd + 2 * i));
    _mm256_storeu_pd(yd + 2 * i, c);
  }
  for (; i < len; ++i) y[i] += alpha * x[i];
}

double wdot_avx2(const double* w, const double* a, const double* b, std::size_t len) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  const std::size_t len4 = len & ~std::size_t(3);
  for (; i < len4; i += 4) {
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), t, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
  for (; i < len; ++i) s += w[i] * a[i] * b[i];
  return s;
}

}  // namespace

namespace detail {
const Backend avx2_backend = {&zgemm_acc_avx2, &dgemm_acc_avx2, &zaxpy_avx2, &wdot_avx2};
}

}  // namespace kamosc::kernels
