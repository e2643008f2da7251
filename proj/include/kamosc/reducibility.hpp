#pragma once

#include <functional>
#include <optional>

#include "kamosc/engine.hpp"
#include "kamosc/hermite.hpp"

namespace kamosc {

/// Real-valued potential on T^n x R, analytic in the angles.
struct QuasiPeriodicPotential {
  int angles = 1;
  std::function<double(std::span<const double> theta, double x)> eval;
  double analyticity_width = 0.5;
  double decay_C = 1.0, decay_delta = 1.0;  ///< |V| <= C (1+x^2)^{-delta} metadata
};

struct BuildQResult {
  TaylorHamiltonian ham;
  double alias_shell_fraction = 0.0;  ///< Fourier mass on the |k| = K shell / total
  bool alias_warning = false;
};

/// Q(theta) = integral V(theta, x) (sum z_j h_j)(sum zbar_l h_l) dx as a
/// Fourier family of coupling matrices, truncated to |k|_inf <= K; reality
/// symmetry enforced exactly.
BuildQResult build_Q(const QuasiPeriodicPotential& V, const SpectralBasis& basis, int K,
                     int grid_per_axis);

struct ReduceConfig {
  int J = 32;
  int quad_order = -1;  ///< default 4J
  long K0 = 8;
  double alpha0 = 0.01;
  double tau = -1.0;  ///< default n+3
  double s0 = 0.4;
  double beta = 0.25;
  double psi_p = 2.0;
  double r0 = 1.0;
  double M0 = 1.0;
  double c0 = 8.0, c1 = 8.0;
  double t_exponent = -1.0;  ///< default 2 tau + n + 1
  int max_nu = 5;
  double target_majorant = 1e-12;
  bool strict_gate = false;
  int theta_grid = -1;  ///< default 2(2K0+1)
};

struct ReducibilityResult {
  std::vector<double> omega;
  std::vector<double> Omega_star;
  SymplecticMap map;
  std::vector<std::pair<std::vector<int>, CMat>> L_series;  ///< Fourier side of the z-block
  std::vector<TraceRecord> trace;
  std::vector<std::string> warnings;
  double conjugacy_residual = 0.0;  ///< majorant of (N0+P0) o Phi - N*
  double alias_shell_fraction = 0.0;
  bool converged = false;
};

struct ResonanceExclusion : std::runtime_error {
  std::string index;
  ResonanceExclusion(std::string idx, const std::string& what)
      : std::runtime_error(what), index(std::move(idx)) {}
};

/// Theorem-7.1 pipeline: N = omega.y + sum (2j-1) z_j zbar_j, P = eps Q,
/// KAM run on the quadratic class, composed transformation and new normal
/// frequencies. Throws ResonanceExclusion / DivergenceError for the CLI's
/// exit-code mapping.
ReducibilityResult reduce(const QuasiPeriodicPotential& V, std::span<const double> omega,
                          double eps, const ReduceConfig& cfg);

/// x-independent closed form: W(theta) = exp(eps sum_{k!=0} a_k/(k.omega)
/// (e^{i k.theta} - 1)) on the grid. a0 must vanish; |W| = 1 for real input.
std::vector<cplx> oracle_x_independent(
    const std::vector<std::pair<std::vector<int>, cplx>>& fourier_a,
    std::span<const double> omega, double eps, const ThetaGrid& grid, double alpha = 0.0,
    double tau = 4.0);

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<cplx>> states;
  std::vector<double> norm_p0, norm_p2;  ///< l2 and l2_{p=2} norms per sample
};

/// Physical-time integration of zdot_j = -i (2j-1) z_j - i eps dQ/dzbar_j on
/// the Galerkin truncation.
Trajectory integrate_schrodinger(const QuasiPeriodicPotential& V, std::span<const double> omega,
                                 double eps, std::span<const cplx> z0, double T, double tol,
                                 const SpectralBasis& basis, int K, int grid_per_axis,
                                 int samples = 200);

struct KamPrediction {
  std::vector<cplx> z;
  double condition_L0 = 0.0;
};

/// Almost-periodic reconstruction from the reduced system; matches the
/// physical integration (the engine evolves the conjugate coordinate pair,
/// so the reconstruction conjugates at the boundary).
KamPrediction kam_predicted_solution(const ReducibilityResult& result, std::span<const cplx> z0,
                                     double t);

}  // namespace kamosc
