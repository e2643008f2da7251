#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace kamosc {

/// Adaptive Dormand-Prince 5(4) over complex state vectors.
/// rhs(t, y, dydt); observer(t, y) fires at t0 and after each accepted step.
inline void integrate_dopri5(
    const std::function<void(double, std::span<const std::complex<double>>,
                             std::span<std::complex<double>>)>& rhs,
    std::vector<std::complex<double>>& y, double t0, double t1, double tol,
    const std::function<void(double, std::span<const std::complex<double>>)>& observer = {}) {
  using cplx = std::complex<double>;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  const std::size_t dim = y.size();
  const double span_t = t1 - t0;
  if (span_t == 0.0) {
    if (observer) observer(t0, y);
    return;
  }
  const double dir = span_t > 0 ? 1.0 : -1.0;
  double t = t0;
  double h = dir * std::max(1e-6, std::abs(span_t) * 1e-3);
  std::vector<cplx> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), yt(dim),
      ynew(dim);
  if (observer) observer(t, y);
  rhs(t, y, k1);
  int steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (++steps > 2000000) throw std::runtime_error("dopri5: step limit exceeded");
    if (dir * (t + h - t1) > 0.0) h = t1 - t;
    if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t)))
      throw std::runtime_error("dopri5: step-size underflow");

    for (std::size_t i = 0; i < dim; ++i) yt[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, yt, k2);
    for (std::size_t i = 0; i < dim; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, yt, k3);
    for (std::size_t i = 0; i < dim; ++i)
      yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, yt, k4);
    for (std::size_t i = 0; i < dim; ++i)
      yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, yt, k5);
    for (std::size_t i = 0; i < dim; ++i)
      yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, yt, k6);
    for (std::size_t i = 0; i < dim; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + h, ynew, k7);

    double err2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);
      const double sc = tol * (1.0 + std::max(std::abs(y[i]), std::abs(ynew[i])));
      const double r = std::abs(e) / sc;
      err2 += r * r;
    }
    const double err = std::sqrt(err2 / dim);
    if (err <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);  // FSAL
      if (observer) observer(t, y);
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    h *= fac;
  }
}

}  // namespace kamosc
