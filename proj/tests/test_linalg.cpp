#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kamosc/linalg.hpp"

using namespace kamosc;

namespace {
std::mt19937_64 rng(99);
CMat random_cmat(int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMat A(n, n);
  for (auto& v : A.a) v = cplx(u(rng), u(rng));
  return A;
}
}  // namespace

TEST_CASE("solve and inverse") {
  const int n = 12;
  CMat A = random_cmat(n);
  for (int i = 0; i < n; ++i) A(i, i) += 4.0;  // well conditioned
  CMat X = solve(A, CMat::identity(n));
  CMat P = matmul(A, X);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(std::abs(P(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
}

TEST_CASE("expm of a diagonal matrix") {
  CMat A(3, 3);
  A(0, 0) = cplx(0.0, 1.0);
  A(1, 1) = cplx(-0.5, 0.0);
  A(2, 2) = cplx(0.2, -2.0);
  CMat E = expm(A);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(E(i, i) - std::exp(A(i, i))) < 1e-14);
  CHECK(std::abs(E(0, 1)) < 1e-15);
}

TEST_CASE("expm group property and inverse") {
  CMat A = random_cmat(8);
  for (auto& v : A.a) v *= 0.3;
  CMat E1 = expm(A);
  CMat Ah = A;
  for (auto& v : Ah.a) v *= 0.5;
  CMat Eh = expm(Ah);
  CMat E2 = matmul(Eh, Eh);
  CHECK(max_abs(E1 - E2) < 1e-12 * (1.0 + max_abs(E1)));

  CMat Am = A;
  for (auto& v : Am.a) v = -v;
  CMat P = matmul(E1, expm(Am));
  CHECK(max_abs(P - CMat::identity(8)) < 1e-12);
}

TEST_CASE("expm with scaling for larger norms") {
  CMat A = random_cmat(6);
  for (auto& v : A.a) v *= 4.0;  // one-norm above the Pade threshold
  CMat E = expm(A);
  // exp(A) exp(-A) = I validates the squaring phase
  CMat Am = A;
  for (auto& v : Am.a) v = -v;
  CMat P = matmul(E, expm(Am));
  CHECK(max_abs(P - CMat::identity(6)) < 1e-9);
}

TEST_CASE("symmetric eigensolver") {
  const int n = 10;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RMat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      A(i, j) = u(rng);
      A(j, i) = A(i, j);
    }
  std::vector<double> evals;
  RMat evecs;
  sym_eig(A, evals, evecs);
  for (int k = 0; k < n; ++k) {
    // residual A v - lambda v
    for (int i = 0; i < n; ++i) {
      double av = 0.0;
      for (int j = 0; j < n; ++j) av += A(i, j) * evecs(k, j);
      CHECK(std::abs(av - evals[k] * evecs(k, i)) < 1e-12);
    }
  }
  for (int k = 0; k + 1 < n; ++k) CHECK(evals[k] <= evals[k + 1]);
}

TEST_CASE("tridiagonal eigenvalues of a known matrix") {
  // diag 2, off -1: eigenvalues 2 - 2 cos(k pi / (n+1))
  const int n = 8;
  std::vector<double> d(n, 2.0), e(n - 1, -1.0);
  auto ev = tridiag_eigenvalues(d, e);
  for (int k = 1; k <= n; ++k)
    CHECK(ev[k - 1] == doctest::Approx(2.0 - 2.0 * std::cos(k * M_PI / (n + 1))).epsilon(1e-12));
}
