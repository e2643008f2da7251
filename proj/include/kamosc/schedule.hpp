#pragma once

#include <optional>
#include <vector>

namespace kamosc {

/// Iteration parameter sequences: alpha_nu = (alpha0/2)(1 + 2^-nu),
/// M_nu = M0 (2 - 2^-nu), sigma halves, s_{nu+1} = s_nu - 5 sigma_nu with
/// sigma0 = s0/40, eps_{nu+1} = c1 eps_nu^kappa / (alpha_nu sigma_nu^t)^{kappa-1}
/// with kappa = 4/3, eta_nu^3 = eps_nu / (alpha_nu sigma_nu^t), r_{nu+1} =
/// eta_nu r_nu, K_nu = K0 2^nu.
struct KamSchedule {
  double s0 = 0, alpha0 = 0, M0 = 0, tau = 0, t = 0, c0 = 0, c1 = 0;
  double kappa = 4.0 / 3.0;
  double gamma0 = 0;        ///< (c0 + 2^{t+3} c1)^{-3}
  double eps0 = 0;          ///< gamma0 alpha0 sigma0^t
  double K0_formula = 0;    ///< (1/(c1 gamma0))^{1/(tau+1)}
  long K0_used = 0;
  int max_nu = 0;

  std::vector<double> alpha, M, lambda, eps, sigma, eta, s, r;
  std::vector<long> K;
};

/// Builds the schedule arrays for nu = 0..max_nu. K0_override replaces the
/// formula value of K0 (recorded separately); r0 scales the radius sequence.
/// K_nu is capped against long overflow by reducing max_nu.
KamSchedule make_schedule(double s0, double alpha0, double M0, double tau, double t, double c0,
                          double c1, int max_nu, std::optional<long> K0_override = {},
                          double r0 = 1.0);

}  // namespace kamosc
