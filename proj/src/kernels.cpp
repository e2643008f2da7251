#include "kamosc/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

namespace kamosc::kernels {
namespace {

struct Dispatch {
  const detail::Backend* backend;
  std::string name;
  Dispatch() { reset("auto"); }
  void reset(const std::string& want) {
#ifdef KAMOSC_WITH_AVX2
    const bool cpu_ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    const bool cpu_ok = false;
#endif
    std::string req = want;
    if (req == "auto") {
      if (const char* env = std::getenv("KAMOSC_KERNEL")) req = env;
    }
    if (req == "avx2") {
#ifdef KAMOSC_WITH_AVX2
      if (!cpu_ok) throw std::invalid_argument("avx2 kernels unavailable on this CPU");
      backend = &detail::avx2_backend;
      name = "avx2";
      return;
#else
      throw std::invalid_argument("avx2 kernels not compiled in");
#endif
    }
    if (req == "scalar") {
      backend = &detail::scalar_backend;
      name = "scalar";
      return;
    }
    if (req == "auto" || req.empty()) {
#ifdef KAMOSC_WITH_AVX2
      if (cpu_ok) {
        backend = &detail::avx2_backend;
        name = "avx2";
        return;
      }
#endif
      backend = &detail::scalar_backend;
      name = "scalar";
      return;
    }
    throw std::invalid_argument("unknown kernel backend: " + req);
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

void zgemm_acc(const cplx* A, const cplx* B, cplx* C, int m, int p, int n) {
  dispatch().backend->zgemm_acc(A, B, C, m, p, n);
}
void dgemm_acc(const double* A, const double* B, double* C, int m, int p, int n) {
  dispatch().backend->dgemm_acc(A, B, C, m, p, n);
}
void zaxpy(cplx alpha, const cplx* x, cplx* y, std::size_t len) {
  dispatch().backend->zaxpy(alpha, x, y, len);
}
double wdot(const double* w, const double* a, const double* b, std::size_t len) {
  return dispatch().backend->wdot(w, a, b, len);
}

const std::string& active_backend() { return dispatch().name; }
void select_backend(const std::string& name) { dispatch().reset(name); }

}  // namespace kamosc::kernels
