#include "kamosc/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace kamosc {

KamSchedule make_schedule(double s0, double alpha0, double M0, double tau, double t, double c0,
                          double c1, int max_nu, std::optional<long> K0_override, double r0) {
  if (!(s0 > 0.0)) throw std::invalid_argument("make_schedule: s0 > 0 required");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0))
    throw std::invalid_argument("make_schedule: alpha0 in (0,1] required");
  if (!(M0 > 0.0)) throw std::invalid_argument("make_schedule: M0 > 0 required");
  if (!(c0 >= 1.0 && c1 >= 1.0)) throw std::invalid_argument("make_schedule: c0, c1 >= 1 required");
  if (max_nu < 0) throw std::invalid_argument("make_schedule: max_nu >= 0 required");

  KamSchedule sc;
  sc.s0 = s0;
  sc.alpha0 = alpha0;
  sc.M0 = M0;
  sc.tau = tau;
  sc.t = t;
  sc.c0 = c0;
  sc.c1 = c1;
  sc.gamma0 = std::pow(c0 + std::ldexp(c1, static_cast<int>(t) + 3), -3.0);
  const double sigma0 = s0 / 40.0;
  if (sigma0 > 0.25) throw std::invalid_argument("make_schedule: s0/40 <= 1/4 required");
  sc.eps0 = sc.gamma0 * alpha0 * std::pow(sigma0, t);
  sc.K0_formula = std::pow(1.0 / (c1 * sc.gamma0), 1.0 / (tau + 1.0));
  long K0 = K0_override ? *K0_override : std::lround(std::ceil(sc.K0_formula));
  if (K0 < 1) throw std::invalid_argument("make_schedule: K0 >= 1 required");
  sc.K0_used = K0;

  // cap max_nu so K_nu never overflows
  int cap = max_nu;
  while (cap > 0 && K0 > (std::numeric_limits<long>::max() >> cap)) --cap;
  sc.max_nu = cap;

  const int count = sc.max_nu + 1;
  sc.alpha.resize(count);
  sc.M.resize(count);
  sc.lambda.resize(count);
  sc.eps.resize(count);
  sc.sigma.resize(count);
  sc.eta.resize(count);
  sc.s.resize(count);
  sc.r.resize(count);
  sc.K.resize(count);

  sc.s[0] = s0;
  sc.sigma[0] = sigma0;
  sc.eps[0] = sc.eps0;
  sc.r[0] = r0;
  for (int nu = 0; nu < count; ++nu) {
    const double pow2 = std::ldexp(1.0, -nu);
    sc.alpha[nu] = 0.5 * alpha0 * (1.0 + pow2);
    sc.M[nu] = M0 * (2.0 - pow2);
    sc.lambda[nu] = sc.alpha[nu] / sc.M[nu];
    sc.K[nu] = K0 << nu;
    const double denom = sc.alpha[nu] * std::pow(sc.sigma[nu], t);
    sc.eta[nu] = std::cbrt(sc.eps[nu] / denom);
    if (nu + 1 < count) {
      sc.sigma[nu + 1] = 0.5 * sc.sigma[nu];
      sc.s[nu + 1] = sc.s[nu] - 5.0 * sc.sigma[nu];
      sc.eps[nu + 1] = c1 * std::pow(sc.eps[nu], sc.kappa) / std::pow(denom, sc.kappa - 1.0);
      sc.r[nu + 1] = sc.eta[nu] * sc.r[nu];
    }
  }
  return sc;
}

}  // namespace kamosc
