#include "kamosc/divisors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace kamosc {

FrequencySet FrequencySet::harmonic(std::span<const double> omega, int J) {
  FrequencySet f;
  f.omega.assign(omega.begin(), omega.end());
  f.Omega.resize(J);
  for (int j = 1; j <= J; ++j) f.Omega[j - 1] = 2.0 * j - 1.0;
  f.gap_slope = 2.0;
  f.gap_offset = -1.0;
  f.drift_bound = 0.0;
  return f;
}

DivisorIndex::DivisorIndex(std::vector<int> k_, std::vector<std::pair<int, int>> l_)
    : k(std::move(k_)) {
  for (const auto& [mode, coeff] : l_) {
    if (mode < 1) throw std::invalid_argument("DivisorIndex: mode index must be >= 1");
    if (coeff == 0) continue;
    bool merged = false;
    for (int i = 0; i < nl; ++i) {
      if (l[i].first == mode) {
        l[i].second += coeff;
        merged = true;
        break;
      }
    }
    if (!merged) {
      if (nl == 2) throw std::invalid_argument("DivisorIndex: |l| <= 2 violated");
      l[nl++] = {mode, coeff};
    }
  }
  // drop cancelled entries
  int w = 0;
  for (int i = 0; i < nl; ++i)
    if (l[i].second != 0) l[w++] = l[i];
  nl = w;
  if (l_norm() > 2) throw std::invalid_argument("DivisorIndex: |l| <= 2 violated");
  bool k_zero = true;
  for (int v : k)
    if (v != 0) k_zero = false;
  if (k_zero && nl == 0) throw std::invalid_argument("DivisorIndex: (k,l) = 0 excluded");
}

int DivisorIndex::l_norm() const {
  int s = 0;
  for (int i = 0; i < nl; ++i) s += std::abs(l[i].second);
  return s;
}

long DivisorIndex::l_weighted() const {
  long s = 0;
  for (int i = 0; i < nl; ++i) s += static_cast<long>(l[i].first) * l[i].second;
  return 1 + std::labs(s);
}

int DivisorIndex::k_l1() const {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

std::string DivisorIndex::str() const {
  std::ostringstream os;
  os << "k=(";
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
  os << ") l=(";
  for (int i = 0; i < nl; ++i) os << (i ? "," : "") << l[i].second << "*e" << l[i].first;
  os << ")";
  return os.str();
}

double divisor(const DivisorIndex& idx, const FrequencySet& freqs) {
  if (static_cast<int>(idx.k.size()) != freqs.n())
    throw std::invalid_argument("divisor: angle dimension mismatch");
  for (int i = 0; i < idx.nl; ++i)
    if (idx.l[i].first > freqs.modes())
      throw std::out_of_range("divisor: mode index beyond stored frequencies");
  // Neumaier compensated summation, canonical order: k terms, then l slots.
  double sum = 0.0, comp = 0.0;
  auto acc = [&](double v) {
    const double t = sum + v;
    comp += (std::abs(sum) >= std::abs(v)) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  for (int a = 0; a < freqs.n(); ++a) acc(idx.k[a] * freqs.omega[a]);
  for (int i = 0; i < idx.nl; ++i) acc(idx.l[i].second * freqs.Omega[idx.l[i].first - 1]);
  return sum + comp;
}

double spectral_gap_constant(const FrequencySet& freqs) {
  const int J = freqs.modes();
  double worst = std::numeric_limits<double>::infinity();
  auto omega_at = [&](int i) { return i == 0 ? 0.0 : freqs.Omega[i - 1]; };
  for (int i = 0; i <= J; ++i)
    for (int j = i + 1; j <= J; ++j)
      worst = std::min(worst, std::abs(omega_at(i) - omega_at(j)) / (j - i));
  return worst;
}

namespace {

struct Worst {
  double margin = std::numeric_limits<double>::infinity();
  double value = 0.0, threshold = 0.0;
  std::string index;
  double min_abs = std::numeric_limits<double>::infinity();
  long count = 0;

  void consider(double div, double thr, const std::string& idx) {
    ++count;
    min_abs = std::min(min_abs, std::abs(div));
    const double m = std::abs(div) - thr;
    if (m < margin) {
      margin = m;
      value = div;
      threshold = thr;
      index = idx;
    }
  }
};

template <typename Fn>
void for_each_k(int n, int K, Fn&& fn) {
  std::vector<int> k(n, -K);
  for (;;) {
    fn(k);
    int a = 0;
    while (a < n && ++k[a] > K) k[a++] = -K;
    if (a == n) return;
  }
}

std::string kl_str(std::span<const int> k, std::initializer_list<std::pair<int, int>> l) {
  std::ostringstream os;
  os << "k=(";
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
  os << ") l=(";
  bool first = true;
  for (const auto& [mode, coeff] : l) {
    if (coeff == 0) continue;
    os << (first ? "" : ",") << coeff << "*e" << mode;
    first = false;
  }
  os << ")";
  return os.str();
}

double kahan_dot(std::span<const int> k, std::span<const double> w) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double v = k[i] * w[i];
    const double t = sum + v;
    comp += (std::abs(sum) >= std::abs(v)) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// Exact integer reduction for Omega_j = 2j-1: every l with |l| <= 2 has
// l.Omega in Z, and the largest <l> compatible with a value b is
//   b = 0        : <l> = 1 (l = 0, requires k != 0)
//   b odd        : <l> = 1 + (|b|+1)/2            (l = +-e_p)
//   b even, != 0 : <l> = 1 + (|b|+2)/2            (l = +-(e_p+e_q) or +-2e_p)
// This covers all modes, including those beyond any finite J.
void certify_constant_gap(const FrequencySet& freqs, double alpha, double tau, int K,
                          Worst& worst) {
  const int n = freqs.n();
  for_each_k(n, K, [&](const std::vector<int>& k) {
    int kl1 = 0;
    for (int v : k) kl1 += std::abs(v);
    const double Ak = 1.0 + std::pow(static_cast<double>(kl1), tau);
    const double s = kahan_dot(k, freqs.omega);
    const bool k_zero = kl1 == 0;
    if (!k_zero) worst.consider(s, alpha * 1.0 / Ak, kl_str(k, {}));
    // Realizable b: enumerate the window where |s + b| could undercut the
    // threshold. Beyond it |s + b| grows with slope 1 vs threshold slope
    // alpha/(2 Ak) <= 1/4.
    const int b0 = static_cast<int>(std::llround(-s));
    const int halfwidth =
        4 + static_cast<int>(std::ceil(alpha * (2.0 + std::abs(s)) / Ak));
    for (int b = b0 - halfwidth; b <= b0 + halfwidth; ++b) {
      if (b == 0) continue;  // covered by the l = 0 case
      double lw;
      if (b % 2 != 0)
        lw = 1.0 + (std::abs(b) + 1) / 2;
      else
        lw = 1.0 + (std::abs(b) + 2) / 2;
      std::ostringstream os;
      os << "k=(";
      for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
      os << ") l.Omega=" << b;
      worst.consider(s + b, alpha * lw / Ak, os.str());
    }
  });
}

void certify_general(const FrequencySet& freqs, double alpha, double tau, int K, int J,
                     Worst& worst) {
  const int n = freqs.n();
  if (J > freqs.modes()) throw std::invalid_argument("certify: J beyond stored frequencies");
  const auto& Om = freqs.Omega;
  for_each_k(n, K, [&](const std::vector<int>& k) {
    int kl1 = 0;
    for (int v : k) kl1 += std::abs(v);
    const double Ak = 1.0 + std::pow(static_cast<double>(kl1), tau);
    const double s = kahan_dot(k, freqs.omega);
    const bool k_zero = kl1 == 0;
    if (!k_zero) worst.consider(s, alpha / Ak, kl_str(k, {}));
    for (int p = 1; p <= J; ++p) {
      for (int sp : {+1, -1}) {
        worst.consider(s + sp * Om[p - 1], alpha * (1.0 + p) / Ak, kl_str(k, {{p, sp}}));
        worst.consider(s + 2.0 * sp * Om[p - 1], alpha * (1.0 + 2.0 * p) / Ak,
                       kl_str(k, {{p, 2 * sp}}));
      }
      for (int q = 1; q < p; ++q) {
        const double sum = Om[p - 1] + Om[q - 1];
        const double dif = Om[p - 1] - Om[q - 1];
        for (int sp : {+1, -1}) {
          worst.consider(s + sp * sum, alpha * (1.0 + p + q) / Ak, kl_str(k, {{p, sp}, {q, sp}}));
          worst.consider(s + sp * dif, alpha * (1.0 + p - q) / Ak, kl_str(k, {{p, sp}, {q, -sp}}));
        }
      }
    }
    // Asymptotic guard for modes beyond J: Omega_p = slope p + offset + delta,
    // |delta| <= drift. Differences are slope*d + O(2 drift); sums and single
    // modes grow past every threshold, so only finitely many cases matter.
    const double slope = freqs.gap_slope, off = freqs.gap_offset, drift = freqs.drift_bound;
    const double abss = std::abs(s);
    auto guard = [&](double center, double width, double lw, const char* what) {
      std::ostringstream os;
      os << "guard[" << what << "] k=(";
      for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
      os << ")";
      const double div = std::max(0.0, std::abs(center) - width);
      worst.consider(div, alpha * lw / Ak, os.str());
    };
    // l = +-(e_p - e_q), p or q > J, d = p - q >= 1
    const int dmax = static_cast<int>((abss + 2 * drift + alpha + 2.0) / std::max(slope - alpha, 0.5)) + 2;
    for (int d = 1; d <= dmax; ++d)
      for (int sp : {+1, -1}) guard(s + sp * slope * d, 2 * drift, 1.0 + d, "diff");
    // l = +-e_p and +-2e_p, p > J
    const int pmax = static_cast<int>((abss + drift + std::abs(off) + alpha + 2.0) /
                                      std::max(slope - alpha, 0.5)) + J + 2;
    for (int p = J + 1; p <= pmax; ++p)
      for (int sp : {+1, -1}) {
        guard(s + sp * (slope * p + off), drift, 1.0 + p, "single");
        guard(s + 2 * sp * (slope * p + off), 2 * drift, 1.0 + 2.0 * p, "double");
      }
    // l = +-(e_p + e_q), p > J: smallest |l.Omega| already at p+q = J+2.
    for (int t = J + 2; t <= pmax + J + 1; ++t)
      for (int sp : {+1, -1}) guard(s + sp * (slope * t + 2 * off), 2 * drift, 1.0 + t, "sum");
  });
}

}  // namespace

ResonanceReport certify(const FrequencySet& freqs, double alpha, double tau, int K, int J,
                        OmegaModel model) {
  if (!(alpha > 0.0)) throw std::invalid_argument("certify: alpha > 0 required");
  if (!(tau > freqs.n() + 1)) throw std::invalid_argument("certify: tau > n+1 required");
  Worst worst;
  if (model == OmegaModel::kConstantGap)
    certify_constant_gap(freqs, alpha, tau, K, worst);
  else
    certify_general(freqs, alpha, tau, K, J, worst);
  ResonanceReport rep;
  rep.passed = worst.margin >= 0.0;
  rep.worst_value = worst.value;
  rep.worst_threshold = worst.threshold;
  rep.worst_index = worst.index;
  rep.count_checked = worst.count;
  rep.min_abs_divisor = worst.min_abs;
  rep.gap_constant = spectral_gap_constant(freqs);
  return rep;
}

ResonanceReport diophantine(std::span<const double> omega, double alpha, double tau, int K) {
  const int n = static_cast<int>(omega.size());
  if (K < 1) throw std::invalid_argument("diophantine: K >= 1 required");
  Worst worst;
  for_each_k(n, K, [&](const std::vector<int>& k) {
    int kl1 = 0;
    for (int v : k) kl1 += std::abs(v);
    if (kl1 == 0) return;  // k = 0 excluded
    const double s = kahan_dot(k, omega);
    const double thr = 2.0 * std::numbers::pi * alpha / std::pow(static_cast<double>(kl1), tau - 1.0);
    const long b0 = std::lround(s);
    for (long b = b0 - 1; b <= b0 + 1; ++b) {
      std::ostringstream os;
      os << "k=(";
      for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
      os << ") b=" << b;
      worst.consider(s - b, thr, os.str());
    }
  });
  ResonanceReport rep;
  rep.passed = worst.margin >= 0.0;
  rep.worst_value = worst.value;
  rep.worst_threshold = worst.threshold;
  rep.worst_index = worst.index;
  rep.count_checked = worst.count;
  rep.min_abs_divisor = worst.min_abs;
  return rep;
}

double counter_u01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t x = seed;
  x += 0x9E3779B97F4A7C15ULL * (index + 1);
  x += 0xBF58476D1CE4E5B9ULL * (stream + 0x94D049BB133111EBULL);
  // splitmix64 finalizer, applied twice
  for (int round = 0; round < 2; ++round) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
  }
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

MeasureSample excluded_measure(std::span<const double> lo, std::span<const double> hi,
                               double alpha, double tau, int K, int J, OmegaModel model,
                               int samples, std::uint64_t seed) {
  if (samples < 100) throw std::invalid_argument("excluded_measure: samples >= 100 required");
  if (lo.size() != hi.size()) throw std::invalid_argument("excluded_measure: box shape");
  const int n = static_cast<int>(lo.size());
  long excluded = 0;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> omega(n);
    for (int a = 0; a < n; ++a)
      omega[a] = lo[a] + (hi[a] - lo[a]) * counter_u01(seed, a, s);
    FrequencySet f = FrequencySet::harmonic(omega, std::max(J, 1));
    if (alpha == 0.0) {
      // vacuous thresholds: excluded only on exact zeros
      bool exact_zero = false;
      Worst w;
      certify_constant_gap(f, 1e-300, tau, K, w);
      exact_zero = w.min_abs == 0.0;
      if (exact_zero) ++excluded;
      continue;
    }
    const ResonanceReport rep = certify(f, alpha, tau, K, J, model);
    if (!rep.passed) ++excluded;
  }
  MeasureSample out;
  out.alpha = alpha;
  out.fraction_excluded = static_cast<double>(excluded) / samples;
  out.samples = samples;
  out.seed = seed;
  out.K = K;
  out.J = J;
  out.tau = tau;
  return out;
}

}  // namespace kamosc
