#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kamosc/divisors.hpp"
#include "kamosc/hamiltonian.hpp"
#include "kamosc/homological.hpp"
#include "kamosc/lie.hpp"
#include "kamosc/schedule.hpp"

namespace kamosc {

struct TraceRecord {
  int nu = 0;
  double eps_majorant = 0.0;  ///< full majorant: norm + vector-field part + carried tail
  double eps_deg2 = 0.0;      ///< majorant of the weighted-degree-<=2 block alone
  double alpha_nu = 0.0;
  double sigma_nu = 0.0;
  long K_nu = 0;
  double min_divisor = 0.0;
  double freq_drift = 0.0;  ///< |omega - omega_0|_inf + sup_j j^{2 beta} |Omega_j - Omega0_j|
  double tail_mass = 0.0;   ///< dropped Fourier mass + carried degree->=3 bound
  double gate_lhs = 0.0, gate_rhs = 0.0;
  double seconds = 0.0;
};

struct EngineConfig {
  NormParams norms;  ///< r is the initial radius; s is taken from the schedule per step
  double target_majorant = 1e-11;
  bool strict_gate = false;
  bool compute_maps = true;
  double lie_rel_tol = 1e-14;
  int lie_max_terms = 30;
  double freq_tol = 1e-10;
  bool precertify = true;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EngineResult {
  FrequencySet freqs;  ///< the limiting normal-form frequencies
  SymplecticMap map;   ///< composed transformation (quadratic path)
  std::vector<TraceRecord> trace;
  TaylorHamiltonian P_final;
  std::vector<std::string> warnings;
  bool converged = false;
  bool reached_max_nu = false;
};

/// Newton iteration: per step, R = degree-<=2 part of P, {F,N} + N_hat = R,
/// frequencies += the mean-value corrections, P <- the transformed error term.
/// Purely quadratic y-free inputs run on Fourier-mode matrices (exact Lie
/// series, no cancellation against N); everything else runs on the sparse
/// algebra with the degree->=3 block carried by majorant bound.
class KamEngine {
 public:
  KamEngine(FrequencySet N0, TaylorHamiltonian P0, KamSchedule sched, EngineConfig cfg);

  /// Majorants and bookkeeping of the current P_nu (no transformation).
  TraceRecord measure() const;
  TraceRecord step();
  EngineResult run();

  const FrequencySet& freqs() const { return freqs_; }
  const TaylorHamiltonian& perturbation() const { return P_; }
  int nu() const { return nu_; }
  SymplecticMap composed_map() const;

 private:
  void step_quadratic(TraceRecord& rec);
  void step_generic(TraceRecord& rec);
  NormParams step_norms() const;
  double radius_ = 1.0;

  FrequencySet freqs_;
  FrequencySet freqs0_;
  TaylorHamiltonian P_;
  KamSchedule sched_;
  EngineConfig cfg_;
  bool quadratic_path_ = false;
  int nu_ = 0;
  double carried_tail_ = 0.0;  ///< majorant bound for the frozen degree->=3 block
  std::vector<std::string> warnings_;

  struct StepMap {
    int per_axis = 0;
    std::vector<std::pair<std::vector<int>, CMat>> L_series;
    std::vector<std::vector<std::pair<std::vector<int>, CMat>>> M_series;  // per axis
  };
  std::vector<StepMap> step_maps_;

  friend struct KamEngineTestAccess;
};

/// Mode-matrix form of a purely quadratic y-free Hamiltonian: k -> symmetric
/// 2J x 2J coefficient matrix of 1/2 Z.A_k Z e^{i k.theta}.
using QuadModes = std::map<std::vector<int>, CMat>;

QuadModes quad_modes_of(const TaylorHamiltonian& H);
TaylorHamiltonian ham_of_quad_modes(const QuadModes& modes, int angles, int J, int K, int D = 2);

}  // namespace kamosc
