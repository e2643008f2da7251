#pragma once

#include <cstdint>

#include "kamosc/hermite.hpp"

namespace kamosc {

/// Constrained minimization of J(phi) = integral 1/2((phi')^2 + x^2 phi^2) +
/// 1/(p+1)|phi|^{p+1} on the L^2 sphere of radius mu, with successive
/// orthogonality to the earlier minimizers.
struct VariationalProblem {
  double mu = 1.0;
  double p = 3.0;
  int modes = 48;  ///< Hermite truncation for the minimizers
  int count = 1;
  double tol = 1e-6;        ///< first-order-condition target
  int max_iter = 20000;
  int restarts = 3;
  bool focusing = false;    ///< -eps |u|^{p-1} u variant (p < 5)
  double eps_focus = 0.0;
};

struct Minimizer {
  std::vector<double> coeffs;  ///< Hermite coefficients
  double lambda = 0.0;         ///< (T phi, phi) + integral |phi|^{p+1}) / mu^2
  double energy = 0.0;
  double grad_norm = 0.0;  ///< projected-gradient norm at exit
  int iterations = 0;
};

/// Projected gradient descent with Barzilai-Borwein steps and backtracking;
/// the energy decreases monotonically. Random orthogonal-complement restarts
/// seeded by (seed, k).
std::vector<Minimizer> minimize(const VariationalProblem& prob, const SpectralBasis& basis,
                                std::uint64_t seed);

/// l2 norm of the Hermite coefficients of T phi - lambda phi + |phi|^{p-1} phi.
double residual(std::span<const double> coeffs, double lambda, double p,
                const SpectralBasis& basis);

/// Integrates the truncated flow i u_t = T u + |u|^{p-1} u from phi and
/// returns sup_t |u(t) - e^{-i lambda t} phi|_{l2}.
double verify_periodic_orbit(std::span<const double> coeffs, double lambda, double p, double T,
                             double tol, const SpectralBasis& basis);

double energy_functional(std::span<const double> coeffs, double p, const SpectralBasis& basis,
                         bool focusing = false, double eps_focus = 0.0);

}  // namespace kamosc
