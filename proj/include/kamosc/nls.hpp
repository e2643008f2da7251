#pragma once

#include <cstdint>

#include "kamosc/engine.hpp"
#include "kamosc/hermite.hpp"

namespace kamosc {

/// Potential family V(xi, x) = sum_k xi_k f_k(x) + xi_1 g(x) with (f_k) the
/// dual basis of (h_k^2)_{k<=n} and g a damped random combination of
/// sqrt(2)-rescaled odd Hermite functions.
struct PotentialFamily {
  int n = 1;
  int k_max = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> dual_coeffs;  ///< f_j = sum_i dual_coeffs[j][i] h_{i+1}^2
  std::vector<double> alpha_g;                   ///< alpha_k, k = n+1 .. k_max, in [-1/2, 1/2]
};

/// Solves the Gram system for the dual basis of (h_j^2)_{1<=j<=n}.
std::vector<std::vector<double>> dual_basis(int n, const SpectralBasis& basis);

PotentialFamily make_family(int n, const SpectralBasis& basis, std::uint64_t seed, int k_max);

std::vector<double> family_potential_at_nodes(const PotentialFamily& family,
                                              std::span<const double> xi,
                                              const SpectralBasis& basis);

/// g and the f_k sampled at arbitrary points (used for rescaled quadrature).
double family_g_at(const PotentialFamily& family, double x);

struct PerturbedSpectrum {
  std::vector<double> lambda;  ///< ascending eigenvalues of T + nu V
  RMat phi;                    ///< row j-1: Hermite coefficients of phi_j, <phi_j, h_j> > 0
  double nu = 0.0;
  std::vector<double> xi;
};

PerturbedSpectrum perturbed_spectrum(const PotentialFamily& family, double nu,
                                     std::span<const double> xi, const SpectralBasis& basis);

/// (analytic, finite-difference) pair for d lambda_j / d xi_k; the analytic
/// side is nu * integral (f_k + delta_{1k} g) phi_j^2.
std::pair<double, double> frequency_derivative_check(const PotentialFamily& family, double nu,
                                                     std::span<const double> xi, int j, int k,
                                                     const SpectralBasis& basis);

struct NondegeneracyReport {
  double min_dist_single = 0.0;  ///< min over p of dist(I_{n+p}, Z)
  double min_dist_pair = 0.0;    ///< min over p != q, both signs
  double min_mu_diag = 0.0;      ///< min |mu_{jj}| over the scanned range
  double max_mu_residual = 0.0;  ///< reconstruction defect of the h_j^2 expansion
  double min_divisor = 0.0;      ///< sampled min |k.lambda + l.Lambda|
  double excluded_fraction = 0.0;
  int samples = 0;
};

NondegeneracyReport nondegeneracy_scan(const PotentialFamily& family, double nu, int K, int J,
                                       int samples, std::uint64_t seed,
                                       const SpectralBasis& basis, double alpha, double tau);

/// Fourier-Taylor coefficients of P = eps integral |u|^{2(m+1)} about the
/// torus y = z = 0, to weighted degree D; the theta dependence comes from the
/// exact multinomial expansion of the u0 powers.
TaylorHamiltonian build_P(const PotentialFamily& family, std::span<const double> I,
                          std::span<const double> xi, double nu, double eps, int m,
                          const SpectralBasis& basis, int D, int K);

struct NlsRunConfig {
  double alpha0 = 2e-5;
  double tau = -1.0;  ///< default n+3
  double s0 = 0.4;
  double beta = 0.25;
  double psi_p = 2.0;
  double r0 = 0.1;
  double c0 = 8.0, c1 = 8.0;
  long K0 = 4;
  int max_nu = 3;
  int degree_cap = 4;
  double C0 = 10.0;  ///< requires nu >= C0 eps
};

struct NlsRunReport {
  std::vector<TraceRecord> trace;
  std::vector<double> omega0, omega_star;
  double drift_omega = 0.0;     ///< |omega* - omega0|_inf
  double drift_over_nu = 0.0;   ///< fitted C in |omega* - omega0| <= C nu
  double first_step_ratio = 0.0;  ///< eps_deg2(1) / eps_deg2(0)
  std::vector<std::string> warnings;
};

NlsRunReport nls_kam_run(const PotentialFamily& family, std::span<const double> I,
                         std::span<const double> xi, double nu, double eps, int m,
                         const SpectralBasis& basis, const NlsRunConfig& cfg);

}  // namespace kamosc
