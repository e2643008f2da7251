#include "kamosc/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace kamosc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct PlanCache {
  std::map<std::tuple<int, int, int>, fftw_plan> plans;  // (n, G, sign)
  fftw_complex* buf = nullptr;
  std::size_t buf_len = 0;

  fftw_complex* buffer(std::size_t len) {
    if (len > buf_len) {
      fftw_free(buf);
      buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * len));
      buf_len = len;
    }
    return buf;
  }

  fftw_plan plan(int n, int G, int sign) {
    auto key = std::make_tuple(n, G, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::vector<int> dims(n, G);
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= G;
    fftw_complex* b = buffer(total);
    fftw_plan p = fftw_plan_dft(n, dims.data(), b, b, sign, FFTW_ESTIMATE);
    if (!p) throw std::runtime_error("fftw_plan_dft failed");
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}
}  // namespace

std::vector<double> ThetaGrid::point(long flat) const {
  std::vector<double> theta(angles);
  const double h = kTwoPi / per_axis;
  for (int a = angles - 1; a >= 0; --a) {
    theta[a] = h * (flat % per_axis);
    flat /= per_axis;
  }
  return theta;
}

std::vector<int> ThetaGrid::bin_wave(long flat) const {
  std::vector<int> k(angles);
  for (int a = angles - 1; a >= 0; --a) {
    int b = static_cast<int>(flat % per_axis);
    flat /= per_axis;
    if (b > per_axis / 2) b -= per_axis;
    k[a] = b;
  }
  return k;
}

long ThetaGrid::bin_of(std::span<const int> k) const {
  long flat = 0;
  for (int a = 0; a < angles; ++a) {
    int b = k[a] % per_axis;
    if (b < 0) b += per_axis;
    flat = flat * per_axis + b;
  }
  return flat;
}

ThetaGrid make_grid(int angles, int per_axis) {
  if (angles < 1 || per_axis < 1) throw std::invalid_argument("make_grid: bad dimensions");
  ThetaGrid g;
  g.angles = angles;
  g.per_axis = per_axis;
  g.total = 1;
  for (int a = 0; a < angles; ++a) {
    g.total *= per_axis;
    if (g.total > (1L << 26)) throw std::invalid_argument("make_grid: grid too large");
  }
  return g;
}

std::vector<cplx> dft_forward(const ThetaGrid& grid, std::span<const cplx> values) {
  if (static_cast<long>(values.size()) != grid.total)
    throw std::invalid_argument("dft_forward: size mismatch");
  auto& c = cache();
  fftw_plan p = c.plan(grid.angles, grid.per_axis, FFTW_FORWARD);
  fftw_complex* b = c.buffer(grid.total);
  std::copy(values.begin(), values.end(), reinterpret_cast<cplx*>(b));
  fftw_execute_dft(p, b, b);
  std::vector<cplx> out(reinterpret_cast<cplx*>(b), reinterpret_cast<cplx*>(b) + grid.total);
  const double scale = 1.0 / grid.total;
  for (cplx& v : out) v *= scale;
  return out;
}

std::vector<cplx> dft_backward(const ThetaGrid& grid, std::span<const cplx> coeffs) {
  if (static_cast<long>(coeffs.size()) != grid.total)
    throw std::invalid_argument("dft_backward: size mismatch");
  auto& c = cache();
  fftw_plan p = c.plan(grid.angles, grid.per_axis, FFTW_BACKWARD);
  fftw_complex* b = c.buffer(grid.total);
  std::copy(coeffs.begin(), coeffs.end(), reinterpret_cast<cplx*>(b));
  fftw_execute_dft(p, b, b);
  return std::vector<cplx>(reinterpret_cast<cplx*>(b), reinterpret_cast<cplx*>(b) + grid.total);
}

cplx eval_fourier(const std::vector<std::pair<std::vector<int>, cplx>>& series,
                  std::span<const double> theta) {
  cplx s = 0.0;
  for (const auto& [k, c] : series) {
    double phase = 0.0;
    for (std::size_t a = 0; a < k.size(); ++a) phase += k[a] * theta[a];
    s += c * std::exp(cplx(0.0, phase));
  }
  return s;
}

}  // namespace kamosc
