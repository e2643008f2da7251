#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <random>

#include "kamosc/engine.hpp"

using namespace kamosc;

namespace {

constexpr double kGolden = 2.0 * std::numbers::pi * 0.6180339887498948482;

Monomial key_of(int n, std::vector<int> k, std::vector<int> m,
                std::vector<std::pair<int, int>> q, std::vector<std::pair<int, int>> qb) {
  Monomial key;
  key.angles = static_cast<std::int8_t>(n);
  for (std::size_t a = 0; a < k.size(); ++a) key.k[a] = static_cast<std::int16_t>(k[a]);
  for (std::size_t a = 0; a < m.size(); ++a) key.m[a] = static_cast<std::uint8_t>(m[a]);
  for (auto [j, e] : q) key.add_q(j, e);
  for (auto [j, e] : qb) key.add_qbar(j, e);
  return key;
}

KamSchedule default_schedule(int max_nu, long K0) {
  return make_schedule(0.4, 0.01, 1.0, 4.0, 10.0, 8.0, 8.0, max_nu, K0);
}

EngineConfig default_config() {
  EngineConfig cfg;
  cfg.norms = NormParams(0.4, 1.0, 0.25, 2.0);
  cfg.target_majorant = 1e-13;
  return cfg;
}

/// eps cos(theta) B with B_{jl} real symmetric decaying couplings.
TaylorHamiltonian one_harmonic_coupling(int J, double eps, bool x_dependent) {
  TaylorHamiltonian P(1, J, 8, 2);
  for (int j = 1; j <= J; ++j)
    for (int l = 1; l <= J; ++l) {
      const double b = x_dependent ? 1.0 / ((1.0 + std::abs(j - l)) * std::sqrt(j + l))
                                   : (j == l ? 1.0 : 0.0);
      for (int k : {-1, 1}) {
        Monomial key;
        key.angles = 1;
        key.k[0] = static_cast<std::int16_t>(k);
        key.add_q(j, 1);
        key.add_qbar(l, 1);
        P.add_term(key, 0.5 * eps * b);
      }
    }
  return P;
}

}  // namespace

TEST_CASE("P = 0 returns immediately with the identity") {
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{kGolden}, 6);
  TaylorHamiltonian P(1, 6, 8, 2);
  KamEngine engine(N0, P, default_schedule(4, 8), default_config());
  const auto res = engine.run();
  CHECK(res.converged);
  CHECK(res.trace.size() == 1);
  CHECK(res.trace[0].eps_majorant == 0.0);
  for (int j = 1; j <= 6; ++j) CHECK(res.freqs.Omega[j - 1] == 2.0 * j - 1.0);
}

TEST_CASE("k = 0 diagonal perturbation is absorbed into the frequencies in one step") {
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{kGolden}, 4);
  TaylorHamiltonian P(1, 4, 8, 2);
  P.add_term(key_of(1, {0}, {}, {{2, 1}}, {{2, 1}}), 3e-3);
  P.add_term(key_of(1, {0}, {}, {{4, 1}}, {{4, 1}}), -1e-3);
  KamEngine engine(N0, P, default_schedule(3, 8), default_config());
  const auto rec = engine.step();
  CHECK(rec.eps_majorant > 0.0);
  CHECK(engine.perturbation().empty());
  CHECK(engine.freqs().Omega[1] == doctest::Approx(3.0 + 3e-3).epsilon(1e-15));
  CHECK(engine.freqs().Omega[3] == doctest::Approx(7.0 - 1e-3).epsilon(1e-15));
  CHECK(engine.freqs().Omega[0] == 1.0);
}

TEST_CASE("one-harmonic x-independent input annihilates in one step") {
  const int J = 8;
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{kGolden}, J);
  TaylorHamiltonian P = one_harmonic_coupling(J, 0.01, false);
  KamEngine engine(N0, P, default_schedule(4, 8), default_config());
  const auto rec = engine.step();
  CHECK(rec.min_divisor == doctest::Approx(kGolden));
  // the whole series vanishes: brackets of co-diagonal couplings cancel
  const auto post = engine.measure();
  CHECK(post.eps_majorant < 1e-16);
  for (int j = 1; j <= J; ++j)
    CHECK(engine.freqs().Omega[j - 1] == 2.0 * j - 1.0);  // Omega untouched
}

TEST_CASE("Newton contraction on an x-dependent quadratic perturbation") {
  const int J = 8;
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{kGolden}, J);
  TaylorHamiltonian P = one_harmonic_coupling(J, 1e-3, true);
  auto cfg = default_config();
  cfg.target_majorant = 1e-30;
  KamEngine engine(N0, P, default_schedule(4, 8), cfg);
  const auto res = engine.run();
  REQUIRE(res.trace.size() >= 4);
  // superlinear: log eps_{nu+1} / log eps_nu >= 1.2 once below 1e-4
  int checked = 0;
  for (std::size_t i = 0; i + 1 < res.trace.size(); ++i) {
    const double e0 = res.trace[i].eps_majorant, e1 = res.trace[i + 1].eps_majorant;
    if (e0 < 1e-4 && e0 > 0.0 && e1 > 0.0) {
      CHECK(std::log(e1) / std::log(e0) >= 1.2);
      ++checked;
    }
  }
  CHECK(checked >= 2);
  // frequency drift stays at the eps scale
  CHECK(res.trace.back().freq_drift < 10.0 * res.trace[0].eps_majorant);
  // composed map is symplectic
  CHECK(res.map.symplecticity < 1e-10);
}

TEST_CASE("final non-resonance at alpha0/2 after the run") {
  const int J = 8;
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{kGolden}, J);
  TaylorHamiltonian P = one_harmonic_coupling(J, 1e-3, true);
  KamEngine engine(N0, P, default_schedule(4, 8), default_config());
  const auto res = engine.run();
  const auto rep = certify(res.freqs, 0.005, 4.0, 32, J);
  CHECK(rep.passed);
}

TEST_CASE("resonant frequencies are rejected up front") {
  // omega = 2 collides with the constant-gap differences
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{2.0}, 6);
  TaylorHamiltonian P = one_harmonic_coupling(6, 1e-3, true);
  CHECK_THROWS_AS(KamEngine(N0, P, default_schedule(3, 8), default_config()),
                  ResonantDivisor);
}

TEST_CASE("generic path: mixed perturbation contracts the degree-2 block") {
  const int J = 6;
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{kGolden}, J);
  TaylorHamiltonian P(1, J, 8, 4);
  // quadratic resonant content plus y-terms plus a quartic tail
  P.add_term(key_of(1, {1}, {}, {{1, 1}}, {{3, 1}}), 4e-4);
  P.add_term(key_of(1, {-1}, {}, {{3, 1}}, {{1, 1}}), 4e-4);
  P.add_term(key_of(1, {1}, {1}, {}, {}), cplx(2e-4, 1e-4));
  P.add_term(key_of(1, {-1}, {1}, {}, {}), cplx(2e-4, -1e-4));
  P.add_term(key_of(1, {0}, {}, {{2, 1}}, {{2, 1}}), 5e-4);
  P.add_term(key_of(1, {2}, {}, {{1, 1}, {2, 1}}, {{1, 1}, {2, 1}}), 1e-4);
  P.add_term(key_of(1, {-2}, {}, {{1, 1}, {2, 1}}, {{1, 1}, {2, 1}}), 1e-4);
  auto cfg = default_config();
  cfg.target_majorant = 0.0;
  KamEngine engine(N0, P, default_schedule(3, 8), cfg);
  const auto r0 = engine.step();
  const auto r1 = engine.step();
  CHECK(r1.eps_deg2 < 0.02 * r0.eps_deg2);
  CHECK(r1.tail_mass > 0.0);  // carried degree->=3 bound is reported
  // degree->=3 keys are carried, not dropped
  bool has_quartic = false;
  for (const auto& [key, c] : engine.perturbation().coeffs)
    if (key.weighted_degree() == 4) has_quartic = true;
  CHECK(has_quartic);
}

TEST_CASE("Newton quadraticity: scaling the perturbation fits slope 2") {
  // P -> eps P implies majorant(P_1) ~ eps^2: log-log slope across three eps
  const int J = 6;
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{kGolden}, J);
  std::vector<double> logs_eps, logs_maj;
  for (double eps : {2e-3, 1e-3, 5e-4}) {
    TaylorHamiltonian P = one_harmonic_coupling(J, eps, true);
    KamEngine engine(N0, P, default_schedule(2, 8), default_config());
    engine.step();
    logs_eps.push_back(std::log(eps));
    logs_maj.push_back(std::log(engine.measure().eps_majorant));
  }
  const double slope = (logs_maj[0] - logs_maj[2]) / (logs_eps[0] - logs_eps[2]);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("strict gate raises at desk scale") {
  const int J = 4;
  FrequencySet N0 = FrequencySet::harmonic(std::vector<double>{kGolden}, J);
  TaylorHamiltonian P = one_harmonic_coupling(J, 1e-3, true);
  auto cfg = default_config();
  cfg.strict_gate = true;
  KamEngine engine(N0, P, default_schedule(3, 8), cfg);
  CHECK_THROWS_WITH_AS(engine.step(), doctest::Contains("gate"), std::runtime_error);
}
