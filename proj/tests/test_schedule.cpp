#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kamosc/schedule.hpp"

using namespace kamosc;

TEST_CASE("alpha sequence: alpha_1 = 0.75 alpha_0, limit alpha_0/2") {
  const auto sc = make_schedule(1.0, 1.0, 1.0, 4.0, 10.0, 8.0, 8.0, 30, 8);
  CHECK(sc.alpha[0] == 1.0);
  CHECK(sc.alpha[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(sc.alpha[30] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(sc.M[0] == 1.0);
  CHECK(sc.M[1] == doctest::Approx(1.5));
  for (int nu = 0; nu <= 30; ++nu)
    CHECK(sc.lambda[nu] == doctest::Approx(sc.alpha[nu] / sc.M[nu]));
}

TEST_CASE("sigma and strip bookkeeping: sigma0 = s0/40, s stays above s0/2") {
  const auto sc = make_schedule(1.0, 0.5, 1.0, 4.0, 10.0, 8.0, 8.0, 40, 4);
  CHECK(sc.sigma[0] == doctest::Approx(0.025));
  double spent = 0.0;
  for (int nu = 0; nu < 40; ++nu) {
    CHECK(sc.sigma[nu + 1] == doctest::Approx(0.5 * sc.sigma[nu]));
    CHECK(sc.s[nu + 1] == doctest::Approx(sc.s[nu] - 5.0 * sc.sigma[nu]));
    spent += 5.0 * sc.sigma[nu];
    CHECK(sc.s[nu + 1] >= 0.5 * sc.s[0]);
  }
  // sum of 5 sigma_nu approaches 10 sigma0 = s0/4
  CHECK(spent == doctest::Approx(0.25 * sc.s[0]).epsilon(1e-10));
  CHECK(sc.s[40] == doctest::Approx(0.75 * sc.s[0]).epsilon(1e-9));
}

TEST_CASE("eps recursion and eta definition") {
  const auto sc = make_schedule(0.8, 0.3, 2.0, 4.0, 9.0, 8.0, 16.0, 6, 8);
  CHECK(sc.gamma0 == doctest::Approx(std::pow(8.0 + std::ldexp(16.0, 12), -3.0)));
  CHECK(sc.eps[0] == doctest::Approx(sc.gamma0 * 0.3 * std::pow(0.02, 9.0)));
  for (int nu = 0; nu < 6; ++nu) {
    const double denom = sc.alpha[nu] * std::pow(sc.sigma[nu], sc.t);
    CHECK(sc.eta[nu] == doctest::Approx(std::cbrt(sc.eps[nu] / denom)));
    CHECK(sc.eps[nu + 1] ==
          doctest::Approx(sc.c1 * std::pow(sc.eps[nu], 4.0 / 3.0) / std::pow(denom, 1.0 / 3.0)));
    CHECK(sc.r[nu + 1] == doctest::Approx(sc.eta[nu] * sc.r[nu]));
  }
}

TEST_CASE("K doubles from the override or the formula value") {
  const auto sc = make_schedule(0.8, 0.3, 1.0, 4.0, 9.0, 8.0, 8.0, 5, 8);
  for (int nu = 0; nu <= 5; ++nu) CHECK(sc.K[nu] == 8L << nu);
  CHECK(sc.K0_formula == doctest::Approx(std::pow(1.0 / (8.0 * sc.gamma0), 0.2)));

  const auto sc2 = make_schedule(0.8, 0.3, 1.0, 4.0, 9.0, 8.0, 8.0, 5);
  CHECK(sc2.K0_used == std::lround(std::ceil(sc2.K0_formula)));
}

TEST_CASE("K overflow caps max_nu") {
  const auto sc = make_schedule(0.8, 0.3, 1.0, 4.0, 9.0, 8.0, 8.0, 100, 1L << 40);
  CHECK(sc.max_nu < 100);
  CHECK(sc.K.back() > 0);  // no overflow
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(make_schedule(-1.0, 0.3, 1.0, 4.0, 9.0, 8.0, 8.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(0.8, 1.5, 1.0, 4.0, 9.0, 8.0, 8.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(0.8, 0.3, 1.0, 4.0, 9.0, 0.5, 8.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(20.0, 0.3, 1.0, 4.0, 9.0, 8.0, 8.0, 5), std::invalid_argument);
}
