#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kamosc {

/// Internal frequencies omega (R^n) and external frequencies Omega_j, j=1..J,
/// plus the linear-growth model used to bound divisors with modes beyond J:
/// Omega_j = gap_slope*j + gap_offset + delta_j with |delta_j| <= drift_bound.
struct FrequencySet {
  std::vector<double> omega;
  std::vector<double> Omega;
  double gap_slope = 2.0;
  double gap_offset = -1.0;
  double drift_bound = 0.0;

  int n() const { return static_cast<int>(omega.size()); }
  int modes() const { return static_cast<int>(Omega.size()); }
  static FrequencySet harmonic(std::span<const double> omega, int J);  ///< Omega_j = 2j-1
};

/// Index (k, l) with k in Z^n and l a signed mode combination of length <= 2,
/// stored as up to two (mode, coefficient) entries. (k, l) = 0 is rejected.
struct DivisorIndex {
  std::vector<int> k;
  std::array<std::pair<int, int>, 2> l{};  // (mode >= 1, coeff != 0)
  int nl = 0;

  DivisorIndex(std::vector<int> k_, std::vector<std::pair<int, int>> l_);
  int l_norm() const;       ///< |l| = sum |l_j|
  long l_weighted() const;  ///< <l> = 1 + |sum j l_j|
  int k_l1() const;
  std::string str() const;
};

/// k.omega + l.Omega, accumulated with compensated summation in canonical
/// order (k terms then l terms by slot).
double divisor(const DivisorIndex& idx, const FrequencySet& freqs);

struct ResonanceReport {
  bool passed = true;
  double worst_value = 0.0;      ///< divisor of the worst margin
  double worst_threshold = 0.0;  ///< its threshold
  std::string worst_index;
  long count_checked = 0;
  double min_abs_divisor = 0.0;
  double gap_constant = 0.0;  ///< measured min |Omega_i - Omega_j| / |i - j| (with Omega_0 = 0)
};

enum class OmegaModel {
  kGeneral,      ///< enumerate divisors from the stored Omega + asymptotic guard
  kConstantGap,  ///< Omega_j = 2j-1 exactly: integer reduction, all modes covered
};

/// Checks |k.omega + l.Omega| >= alpha <l> / (1 + |k|_1^tau) over |k|_inf <= K,
/// |l| <= 2 with modes in 1..J, plus the beyond-J guard. Failure is a report.
ResonanceReport certify(const FrequencySet& freqs, double alpha, double tau, int K, int J,
                        OmegaModel model = OmegaModel::kGeneral);

/// Diophantine condition |k.omega - b| >= 2 pi alpha / |k|_1^{tau-1} over
/// 0 < |k|_inf <= K and the integers b near k.omega.
ResonanceReport diophantine(std::span<const double> omega, double alpha, double tau, int K);

/// Assumption-2 style gap measurement: min over 0 <= i < j of
/// |Omega_i - Omega_j| / (j - i), with Omega_0 = 0.
double spectral_gap_constant(const FrequencySet& freqs);

struct MeasureSample {
  double alpha;
  double fraction_excluded;
  int samples;
  std::uint64_t seed;
  int K, J;
  double tau;
};

/// Monte-Carlo fraction of omega in the box failing certify; deterministic in
/// (seed, index) via a counter-based generator.
MeasureSample excluded_measure(std::span<const double> lo, std::span<const double> hi,
                               double alpha, double tau, int K, int J, OmegaModel model,
                               int samples, std::uint64_t seed);

/// Counter-based uniform(0,1): value depends only on (seed, stream, index).
double counter_u01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace kamosc
