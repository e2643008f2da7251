#pragma once

#include <stdexcept>
#include <vector>

#include "kamosc/divisors.hpp"
#include "kamosc/hamiltonian.hpp"

namespace kamosc {

/// Raised when a divisor used by the solver violates its non-resonance bound;
/// signals that the frequency parameter must be excluded (re-sampled).
struct ResonantDivisor : std::runtime_error {
  double value;
  double threshold;
  std::string index;
  ResonantDivisor(std::string idx, double v, double thr)
      : std::runtime_error("resonant divisor " + idx + ": |" + std::to_string(v) +
                           "| < " + std::to_string(thr)),
        value(v),
        threshold(thr),
        index(std::move(idx)) {}
};

struct NonRealFrequency : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SkippedKey {
  Monomial key;
  double value;
  double threshold;
};

struct HomologicalSolution {
  TaylorHamiltonian F;      ///< normalized: no k = 0, q = qbar keys
  TaylorHamiltonian N_hat;  ///< mean-value part [R]
  cplx kernel_constant = 0.0;  ///< the k = 0 additive constant of R (gauge term,
                               ///< outside [R] and unreachable by {F, N})
  double min_divisor = std::numeric_limits<double>::infinity();
  std::vector<SkippedKey> skipped;  ///< resonant keys (collect policy only)
};

enum class ResonancePolicy { kThrow, kCollect };

/// Coefficientwise solution of {F, N} + N_hat = R for R of weighted degree
/// <= 2: F_key = R_key / (i (k.omega + (q - qbar).Omega)) off the kernel,
/// N_hat = [R]; every used divisor is checked against alpha <l> / (1+|k|_1^tau).
HomologicalSolution solve_homological(const TaylorHamiltonian& R, const FrequencySet& freqs,
                                      double alpha, double tau, int K,
                                      ResonancePolicy policy = ResonancePolicy::kThrow);

/// Majorant norm of {F, N} + N_hat - R; exact algebra makes this rounding-level.
double verify_homological(const HomologicalSolution& sol, const TaylorHamiltonian& R,
                          const FrequencySet& freqs, const NormParams& params);

/// Frequency corrections: omega_hat_j = y_j coefficient of N_hat, Omega_hat_j
/// = z_j zbar_j coefficient; imaginary parts above tol raise NonRealFrequency.
std::pair<std::vector<double>, std::vector<double>> frequency_update(
    const TaylorHamiltonian& N_hat, int n, int J, double tol = 1e-12);

}  // namespace kamosc
