#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kamosc/kernels.hpp"

using namespace kamosc;
using kernels::cplx;

namespace {

std::mt19937_64 rng(12345);

std::vector<cplx> random_cvec(std::size_t len) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cplx> v(len);
  for (auto& x : v) x = cplx(u(rng), u(rng));
  return v;
}

std::vector<double> random_rvec(std::size_t len) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(len);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("backend equivalence: zgemm") {
  for (auto [m, p, n] : {std::array<int, 3>{4, 4, 4}, {7, 5, 9}, {1, 8, 3}, {16, 16, 17}}) {
    auto A = random_cvec(static_cast<std::size_t>(m) * p);
    auto B = random_cvec(static_cast<std::size_t>(p) * n);
    std::vector<cplx> Cs(static_cast<std::size_t>(m) * n), Cv = Cs;
    kernels::select_backend("scalar");
    kernels::zgemm_acc(A.data(), B.data(), Cs.data(), m, p, n);
    kernels::select_backend("auto");
    kernels::zgemm_acc(A.data(), B.data(), Cv.data(), m, p, n);
    for (std::size_t i = 0; i < Cs.size(); ++i)
      CHECK(std::abs(Cs[i] - Cv[i]) < 1e-13 * (1.0 + std::abs(Cs[i])));
  }
}

TEST_CASE("backend equivalence: dgemm, axpy, wdot") {
  const int m = 9, p = 11, n = 6;
  auto A = random_rvec(static_cast<std::size_t>(m) * p);
  auto B = random_rvec(static_cast<std::size_t>(p) * n);
  std::vector<double> Cs(static_cast<std::size_t>(m) * n), Cv = Cs;
  kernels::select_backend("scalar");
  kernels::dgemm_acc(A.data(), B.data(), Cs.data(), m, p, n);
  kernels::select_backend("auto");
  kernels::dgemm_acc(A.data(), B.data(), Cv.data(), m, p, n);
  for (std::size_t i = 0; i < Cs.size(); ++i) CHECK(Cs[i] == doctest::Approx(Cv[i]).epsilon(1e-13));

  auto x = random_cvec(33);
  auto y0 = random_cvec(33);
  auto ys = y0;
  auto yv = y0;
  const cplx alpha(0.3, -1.2);
  kernels::select_backend("scalar");
  kernels::zaxpy(alpha, x.data(), ys.data(), x.size());
  kernels::select_backend("auto");
  kernels::zaxpy(alpha, x.data(), yv.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(ys[i] - yv[i]) < 1e-14);

  auto w = random_rvec(37);
  auto a = random_rvec(37);
  auto b = random_rvec(37);
  kernels::select_backend("scalar");
  const double ds = kernels::wdot(w.data(), a.data(), b.data(), w.size());
  kernels::select_backend("auto");
  const double dv = kernels::wdot(w.data(), a.data(), b.data(), w.size());
  CHECK(ds == doctest::Approx(dv).epsilon(1e-13));
}

TEST_CASE("zgemm matches a straightforward triple loop") {
  kernels::select_backend("auto");
  const int m = 5, p = 6, n = 7;
  auto A = random_cvec(static_cast<std::size_t>(m) * p);
  auto B = random_cvec(static_cast<std::size_t>(p) * n);
  std::vector<cplx> C(static_cast<std::size_t>(m) * n);
  kernels::zgemm_acc(A.data(), B.data(), C.data(), m, p, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      cplx ref = 0.0;
      for (int k = 0; k < p; ++k) ref += A[i * p + k] * B[k * n + j];
      CHECK(std::abs(C[i * n + j] - ref) < 1e-12);
    }
}
