#pragma once

#include <span>
#include <vector>

#include "kamosc/linalg.hpp"

namespace kamosc {

/// Hermite-function evaluation and Gauss-Hermite quadrature for the oscillator
/// T = -d^2/dx^2 + x^2 with eigenfunctions h_j, T h_j = (2j-1) h_j, j >= 1.
struct SpectralBasis {
  int modes = 0;       ///< J: number of Hermite modes, 1-based indexing j = 1..J
  int quad_order = 0;  ///< Q: quadrature nodes
  std::vector<double> nodes;    ///< Q abscissae, strictly increasing
  std::vector<double> weights;  ///< Q positive weights for integrals of f(x) dx
  std::vector<double> values;   ///< J x Q row-major: values[(j-1)*Q + q] = h_j(x_q)

  double value(int j, int q) const { return values[static_cast<std::size_t>(j - 1) * quad_order + q]; }
};

/// Evaluate h_1..h_jmax at x into out (out[j-1] = h_j(x)).
/// Stable for large jmax: the recurrence runs on the Gaussian-free polynomial
/// part with power-of-two rescaling, and the exponent is recombined per mode.
void hermite_eval(int jmax, double x, std::span<double> out);

/// Builds the basis; requires Q >= 2J+2 so every bilinear integral
/// h_j * h_l * (polynomial of modest degree) stays in the exactness regime.
SpectralBasis build_basis(int J, int Q);

/// Matrix of quadrature integrals v(x) h_j(x) h_l(x); v sampled at the nodes.
/// Symmetric bitwise (upper triangle computed once and mirrored).
RMat assemble_bilinear(const SpectralBasis& basis, std::span<const double> v_at_nodes);

/// samples_q = sum_j coeffs_j h_j(x_q)
std::vector<cplx> synthesize(const SpectralBasis& basis, std::span<const cplx> coeffs);
std::vector<double> synthesize_real(const SpectralBasis& basis, std::span<const double> coeffs);

/// coeffs_j = sum_q w_q samples_q h_j(x_q); inverse of synthesize on the
/// coefficient space in the exactness regime.
std::vector<cplx> analyze(const SpectralBasis& basis, std::span<const cplx> samples);
std::vector<double> analyze_real(const SpectralBasis& basis, std::span<const double> samples);

}  // namespace kamosc
