#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kamosc/variational.hpp"

using namespace kamosc;

namespace {
VariationalProblem problem(double mu, double p, int count, int modes = 32) {
  VariationalProblem prob;
  prob.mu = mu;
  prob.p = p;
  prob.count = count;
  prob.modes = modes;
  prob.tol = 1e-6;
  return prob;
}
}  // namespace

TEST_CASE("linear case recovers mu h_1 with lambda = 2") {
  const auto prob = problem(0.5, 1.0, 1);
  const SpectralBasis basis = build_basis(prob.modes, 4 * prob.modes);
  const auto mins = minimize(prob, basis, 3);
  REQUIRE(mins.size() == 1);
  CHECK(std::abs(std::abs(mins[0].coeffs[0]) - 0.5) < 1e-9);
  for (int j = 1; j < prob.modes; ++j) CHECK(std::abs(mins[0].coeffs[j]) < 1e-8);
  CHECK(mins[0].lambda == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(residual(mins[0].coeffs, mins[0].lambda, 1.0, basis) < 1e-12);
}

TEST_CASE("linear case: lambda is independent of mu") {
  const SpectralBasis basis = build_basis(32, 128);
  for (double mu : {0.25, 1.0, 2.0}) {
    const auto mins = minimize(problem(mu, 1.0, 1), basis, 5);
    CHECK(mins[0].lambda == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("exact linear residual and its response to a lambda shift") {
  const SpectralBasis basis = build_basis(16, 64);
  std::vector<double> c(16, 0.0);
  c[0] = 0.5;  // mu h_1
  CHECK(residual(c, 2.0, 1.0, basis) < 1e-12);
  const double delta = 1e-4;
  CHECK(residual(c, 2.0 + delta, 1.0, basis) == doctest::Approx(delta * 0.5).epsilon(1e-8));
}

TEST_CASE("cubic case: two parity-protected minimizers solve the equation") {
  const auto prob = problem(0.5, 3.0, 2);
  const SpectralBasis basis = build_basis(prob.modes, 4 * prob.modes);
  const auto mins = minimize(prob, basis, 11);
  REQUIRE(mins.size() == 2);

  // constraints: norm mu, mutual orthogonality
  for (const auto& mn : mins) {
    double n2 = 0.0;
    for (double v : mn.coeffs) n2 += v * v;
    CHECK(std::sqrt(n2) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(mn.lambda > 0.0);
  }
  double ortho = 0.0;
  for (int j = 0; j < prob.modes; ++j) ortho += mins[0].coeffs[j] * mins[1].coeffs[j];
  CHECK(std::abs(ortho) < 1e-8);

  // ground state is even, second is odd: residuals reach the (A.2) equation
  CHECK(residual(mins[0].coeffs, mins[0].lambda, 3.0, basis) < 1e-6);
  CHECK(residual(mins[1].coeffs, mins[1].lambda, 3.0, basis) < 1e-6);

  // minimizer beats the linear candidate mu h_1
  std::vector<double> cand(prob.modes, 0.0);
  cand[0] = 0.5;
  CHECK(mins[0].energy <= energy_functional(cand, 3.0, basis) + 1e-12);
}

TEST_CASE("gradient of the energy agrees with finite differences") {
  const SpectralBasis basis = build_basis(12, 48);
  std::vector<double> c(12);
  for (int j = 0; j < 12; ++j) c[j] = 0.3 / (1.0 + j);
  const double p = 3.0;
  // directional derivative against central differences
  std::vector<double> dir(12);
  for (int j = 0; j < 12; ++j) dir[j] = std::sin(1.0 + j) / (1.0 + j);
  const double h = 1e-6;
  std::vector<double> cp = c, cm = c;
  for (int j = 0; j < 12; ++j) {
    cp[j] += h * dir[j];
    cm[j] -= h * dir[j];
  }
  const double fd =
      (energy_functional(cp, p, basis) - energy_functional(cm, p, basis)) / (2.0 * h);
  // analytic: (T c + |phi|^{p-1} phi) . dir
  double an = 0.0;
  {
    const auto u = synthesize_real(basis, c);
    std::vector<double> f(u.size());
    for (std::size_t q = 0; q < u.size(); ++q)
      f[q] = std::pow(std::abs(u[q]), p - 1.0) * u[q];
    const auto nl = analyze_real(basis, f);
    for (int j = 0; j < 12; ++j) an += ((2.0 * j + 1.0) * c[j] + nl[j]) * dir[j];
  }
  CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
}

TEST_CASE("periodic orbit deviation") {
  const SpectralBasis basis = build_basis(24, 96);
  SUBCASE("linear rotation is exact") {
    std::vector<double> c(24, 0.0);
    c[0] = 0.5;
    CHECK(verify_periodic_orbit(c, 2.0, 1.0, 20.0, 1e-11, basis) < 1e-10);
  }
  SUBCASE("T = 0 gives zero deviation") {
    std::vector<double> c(24, 0.0);
    c[0] = 0.5;
    CHECK(verify_periodic_orbit(c, 2.0, 1.0, 0.0, 1e-11, basis) == 0.0);
  }
  SUBCASE("converged cubic minimizer rotates rigidly") {
    auto prob = problem(0.5, 3.0, 1, 24);
    const auto mins = minimize(prob, basis, 3);
    REQUIRE(residual(mins[0].coeffs, mins[0].lambda, 3.0, basis) < 1e-6);
    CHECK(verify_periodic_orbit(mins[0].coeffs, mins[0].lambda, 3.0, 10.0, 1e-11, basis) < 1e-5);
  }
}

TEST_CASE("focusing variant runs under the runaway guard") {
  auto prob = problem(0.5, 3.0, 1, 24);
  prob.focusing = true;
  prob.eps_focus = 0.05;  // small eps mu^{(p+3)/2}
  const SpectralBasis basis = build_basis(prob.modes, 4 * prob.modes);
  const auto mins = minimize(prob, basis, 3);
  CHECK(mins[0].lambda > 0.0);
  // stationarity of the focusing equation T phi - lambda phi - eps |phi|^2 phi
  const auto u = synthesize_real(basis, mins[0].coeffs);
  std::vector<double> f(u.size());
  for (std::size_t q = 0; q < u.size(); ++q) f[q] = u[q] * u[q] * u[q];
  const auto nl = analyze_real(basis, f);
  double r2 = 0.0;
  for (int j = 0; j < prob.modes; ++j) {
    const double r = (2.0 * j + 1.0 - mins[0].lambda) * mins[0].coeffs[j] -
                     prob.eps_focus * nl[j];
    r2 += r * r;
  }
  CHECK(std::sqrt(r2) < 1e-6);
}
