#pragma once

#include <span>
#include <vector>

#include "kamosc/linalg.hpp"

namespace kamosc {

/// Uniform tensor grid on T^n, per_axis points per angle.
struct ThetaGrid {
  int angles = 1;
  int per_axis = 0;
  long total = 0;

  std::vector<double> point(long flat) const;
  /// Multi-index of Fourier bin `flat`, each component mapped to (-G/2, G/2].
  std::vector<int> bin_wave(long flat) const;
  /// Flat wrapped bin of wave vector k (any integers; reduced mod G).
  long bin_of(std::span<const int> k) const;
};

ThetaGrid make_grid(int angles, int per_axis);

/// Normalized forward DFT: coeff[bin(k)] = (1/total) sum_g f(theta_g) e^{-i k.theta_g}.
std::vector<cplx> dft_forward(const ThetaGrid& grid, std::span<const cplx> values);

/// Synthesis: out_g = sum_bins coeff[bin] e^{+i k(bin).theta_g}.
std::vector<cplx> dft_backward(const ThetaGrid& grid, std::span<const cplx> coeffs);

/// Direct evaluation of a sparse Fourier series at one point.
cplx eval_fourier(const std::vector<std::pair<std::vector<int>, cplx>>& series,
                  std::span<const double> theta);

}  // namespace kamosc
