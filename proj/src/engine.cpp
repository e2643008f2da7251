#include "kamosc/engine.hpp"

#include <chrono>
#include <cmath>

namespace kamosc {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

bool purely_quadratic(const TaylorHamiltonian& P) {
  for (const auto& [key, c] : P.coeffs)
    if (key.order_y() != 0 || key.order_z() != 2) return false;
  return true;
}

double freq_drift(const FrequencySet& now, const FrequencySet& base, double beta) {
  double d = 0.0;
  for (int a = 0; a < now.n(); ++a) d = std::max(d, std::abs(now.omega[a] - base.omega[a]));
  double od = 0.0;
  for (int j = 1; j <= now.modes(); ++j)
    od = std::max(od, std::pow(static_cast<double>(j), 2.0 * beta) *
                          std::abs(now.Omega[j - 1] - base.Omega[j - 1]));
  return d + od;
}

}  // namespace

QuadModes quad_modes_of(const TaylorHamiltonian& H) {
  QuadModes modes;
  const int J = H.modes, zdim = 2 * J;
  auto zidx = [&](int mode, bool bar) { return (bar ? J : 0) + mode - 1; };
  for (const auto& [key, c] : H.coeffs) {
    if (key.order_y() != 0 || key.order_z() != 2)
      throw std::invalid_argument("quad_modes_of: non-quadratic term");
    std::vector<int> k(key.angles);
    for (int a = 0; a < key.angles; ++a) k[a] = key.k[a];
    auto [it, fresh] = modes.try_emplace(std::move(k), CMat());
    if (fresh) it->second = CMat(zdim, zdim);
    CMat& A = it->second;
    int i1, i2;
    cplx scale = c;
    if (key.nq == 1 && key.qe[0] == 2) {
      i1 = i2 = zidx(key.qj[0], false);
      scale *= 2.0;
    } else if (key.nqb == 1 && key.qbe[0] == 2) {
      i1 = i2 = zidx(key.qbj[0], true);
      scale *= 2.0;
    } else if (key.nq == 2) {
      i1 = zidx(key.qj[0], false);
      i2 = zidx(key.qj[1], false);
    } else if (key.nqb == 2) {
      i1 = zidx(key.qbj[0], true);
      i2 = zidx(key.qbj[1], true);
    } else {
      i1 = zidx(key.qj[0], false);
      i2 = zidx(key.qbj[0], true);
    }
    if (i1 == i2) {
      A(i1, i1) += scale;
    } else {
      A(i1, i2) += scale;
      A(i2, i1) += scale;
    }
  }
  return modes;
}

TaylorHamiltonian ham_of_quad_modes(const QuadModes& modes, int angles, int J, int K, int D) {
  TaylorHamiltonian H(angles, J, K, D);
  for (const auto& [k, A] : modes) {
    for (int i = 0; i < 2 * J; ++i)
      for (int j = i; j < 2 * J; ++j) {
        const cplx c = i == j ? 0.5 * A(i, i) : A(i, j);
        if (c == cplx(0.0)) continue;
        Monomial key;
        key.angles = static_cast<std::int8_t>(angles);
        for (int a = 0; a < angles; ++a) key.k[a] = static_cast<std::int16_t>(k[a]);
        auto add = [&](int idx) {
          if (idx < J)
            key.add_q(idx + 1, 1);
          else
            key.add_qbar(idx - J + 1, 1);
        };
        add(i);
        add(j);
        H.add_term(key, c);
      }
  }
  return H;
}

namespace {

/// {X, F} on mode matrices: C_{kx+kf} += Ax Jc Af - Af Jc Ax, truncated to
/// |k|_inf <= K_keep; the dropped majorant mass is accumulated via `params`.
/// Product pairs whose bound falls below double precision of the leading term
/// are screened out (bound booked into the dropped mass), and accumulated
/// entries below the roundoff of their own cancellation are zeroed.
QuadModes quad_ad(const QuadModes& F, const QuadModes& X, int K_keep, const NormParams& params,
                  double& dropped_majorant, int angles, int J) {
  QuadModes out;
  std::map<std::vector<int>, std::vector<double>> masses;  // entrywise |contribution| sums
  std::map<std::vector<int>, CMat> jcF, jcX;
  double scale_f = 0.0, scale_x = 0.0;
  for (const auto& [k, A] : F) {
    jcF.emplace(k, jc_times(A));
    scale_f = std::max(scale_f, max_abs(A));
  }
  for (const auto& [k, A] : X) {
    jcX.emplace(k, jc_times(A));
    scale_x = std::max(scale_x, max_abs(A));
  }
  const double screen = 1e-17 * scale_f * scale_x;
  const double zdim = 2.0 * J;

  for (const auto& [kx, Ax] : X) {
    const double ax = max_abs(Ax);
    for (const auto& [kf, Af] : F) {
      const double af = max_abs(Af);
      std::vector<int> ks(kx.size());
      int kinf = 0, kl1 = 0;
      for (std::size_t a = 0; a < kx.size(); ++a) {
        ks[a] = kx[a] + kf[a];
        kinf = std::max(kinf, std::abs(ks[a]));
        kl1 += std::abs(ks[a]);
      }
      if (2.0 * ax * af * zdim < screen) {
        // coarse majorant of the skipped product
        dropped_majorant += 2.0 * ax * af * zdim * zdim * zdim * std::exp(kl1 * params.s) *
                            std::pow(static_cast<double>(J), 2.0 * params.beta);
        continue;
      }
      CMat C = matmul(Ax, jcF.at(kf)) - matmul(Af, jcX.at(kx));
      if (max_abs(C) < 1e-300) continue;
      if (kinf > K_keep) {
        QuadModes one;
        one.emplace(ks, std::move(C));
        dropped_majorant +=
            majorant_norm(ham_of_quad_modes(one, angles, J, kinf, 2), params).total;
        continue;
      }
      auto [it, fresh] = out.try_emplace(ks, C);
      auto [mit, mfresh] = masses.try_emplace(ks, std::vector<double>(C.a.size(), 0.0));
      (void)mfresh;
      if (!fresh) add_scaled(it->second, 1.0, C);
      for (std::size_t t = 0; t < C.a.size(); ++t) mit->second[t] += std::abs(C.a[t]);
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    CMat& C = it->second;
    const auto& mass = masses.at(it->first);
    for (std::size_t t = 0; t < C.a.size(); ++t)
      if (std::abs(C.a[t]) < 1e-14 * mass[t]) C.a[t] = 0.0;
    it = max_abs(C) < 1e-300 ? out.erase(it) : std::next(it);
  }
  return out;
}

double quad_modes_max(const QuadModes& m) {
  double v = 0.0;
  for (const auto& [k, A] : m) v = std::max(v, max_abs(A));
  return v;
}

}  // namespace

KamEngine::KamEngine(FrequencySet N0, TaylorHamiltonian P0, KamSchedule sched, EngineConfig cfg)
    : freqs_(std::move(N0)), freqs0_(freqs_), P_(std::move(P0)), sched_(std::move(sched)),
      cfg_(cfg) {
  if (P_.angles != freqs_.n())
    throw std::invalid_argument("KamEngine: angle dimension mismatch");
  if (P_.modes > freqs_.modes())
    throw std::invalid_argument("KamEngine: perturbation modes beyond frequency set");
  quadratic_path_ = purely_quadratic(P_);
  radius_ = cfg_.norms.r;
  if (cfg_.precertify) {
    const auto rep = certify(freqs_, sched_.alpha[0], sched_.tau, static_cast<int>(sched_.K[0]),
                             freqs_.modes());
    if (!rep.passed)
      throw ResonantDivisor(rep.worst_index, rep.worst_value, rep.worst_threshold);
  }
}

NormParams KamEngine::step_norms() const {
  NormParams p = cfg_.norms;
  p.s = sched_.s[std::min<std::size_t>(nu_, sched_.s.size() - 1)];
  p.r = radius_;
  p.domain_r = -1.0;
  return p;
}

TraceRecord KamEngine::measure() const {
  const NormParams params = step_norms();
  const int idx = std::min<int>(nu_, sched_.max_nu);
  TraceRecord rec;
  rec.nu = nu_;
  rec.alpha_nu = sched_.alpha[idx];
  rec.sigma_nu = sched_.sigma[idx];
  rec.K_nu = sched_.K[idx];
  auto [R, tail3] = taylor_truncate(P_);
  rec.eps_deg2 = majorant_norm(R, params).total;
  const double tail_actual =
      tail3.empty() ? 0.0
                    : majorant_norm(tail3, params).total + vector_field_majorant(tail3, params);
  // eps measures the stored degree-<=2 data; the truncated/carried remainder
  // is reported alongside, not folded in
  rec.tail_mass = std::max(tail_actual, carried_tail_);
  rec.eps_majorant = rec.eps_deg2 + vector_field_majorant(R, params);
  rec.freq_drift = freq_drift(freqs_, freqs0_, cfg_.norms.beta);
  rec.gate_lhs = rec.eps_majorant + rec.tail_mass;
  rec.gate_rhs = sched_.alpha[idx] * std::pow(sched_.sigma[idx], sched_.t + 1.0) *
                 sched_.eta[idx] * sched_.eta[idx] / sched_.c0;
  return rec;
}

TraceRecord KamEngine::step() {
  if (nu_ > sched_.max_nu) throw std::runtime_error("KamEngine: schedule exhausted");
  const double t0 = now_seconds();
  TraceRecord rec = measure();
  if (rec.gate_lhs > rec.gate_rhs) {
    if (cfg_.strict_gate)
      throw std::runtime_error("KamEngine: smallness gate violated in strict mode");
    warnings_.push_back("gate violated at nu=" + std::to_string(nu_));
  }
  if (quadratic_path_)
    step_quadratic(rec);
  else
    step_generic(rec);
  rec.seconds = now_seconds() - t0;

  // empirical radius update r_{nu+1} = eta_nu r_nu with eta^3 = eps/(alpha sigma^t)
  const double denom = sched_.alpha[rec.nu] * std::pow(sched_.sigma[rec.nu], sched_.t);
  const double eta_hat =
      std::clamp(std::cbrt(std::max(rec.eps_majorant, 1e-300) / denom), 1e-3, 1.0);
  radius_ *= eta_hat;
  ++nu_;
  return rec;
}

void KamEngine::step_quadratic(TraceRecord& rec) {
  const int nu = nu_;
  const NormParams params = step_norms();
  const double alpha = sched_.alpha[nu], tau = sched_.tau;
  const int K_active = static_cast<int>(sched_.K[nu]);

  HomologicalSolution sol = solve_homological(P_, freqs_, alpha, tau, K_active);
  rec.min_divisor = sol.min_divisor;

  auto [omega_hat, Omega_hat] = frequency_update(sol.N_hat, freqs_.n(), P_.modes, cfg_.freq_tol);
  for (int a = 0; a < freqs_.n(); ++a) freqs_.omega[a] += omega_hat[a];
  for (int j = 0; j < P_.modes; ++j) freqs_.Omega[j] += Omega_hat[j];
  freqs_.drift_bound = 0.0;
  for (int j = 0; j < freqs_.modes(); ++j)
    freqs_.drift_bound = std::max(
        freqs_.drift_bound,
        std::abs(freqs_.Omega[j] - (freqs_.gap_slope * (j + 1) + freqs_.gap_offset)));

  // exact Lie series on mode matrices:
  //   P+ = sum_{i>=1} (ad_F^i N_hat + i ad_F^i R) / (i+1)!
  const QuadModes Fm = quad_modes_of(sol.F);
  QuadModes termN = quad_modes_of(sol.N_hat);
  QuadModes termR = quad_modes_of(P_);
  QuadModes acc;
  double dropped = 0.0;
  double factorial = 1.0;  // (i+1)!
  bool series_done = Fm.empty();
  for (int i = 1; i <= cfg_.lie_max_terms && !series_done; ++i) {
    termN = quad_ad(Fm, termN, K_active, params, dropped, P_.angles, P_.modes);
    termR = quad_ad(Fm, termR, K_active, params, dropped, P_.angles, P_.modes);
    factorial *= (i + 1);
    double added = 0.0;
    for (const auto* src : {&termN, &termR}) {
      const double w = (src == &termR) ? static_cast<double>(i) / factorial : 1.0 / factorial;
      for (const auto& [k, A] : *src) {
        auto [it, fresh] = acc.try_emplace(k, CMat(A.rows, A.cols));
        add_scaled(it->second, w, A);
        added = std::max(added, w * max_abs(A));
      }
    }
    if (added < cfg_.lie_rel_tol * std::max(quad_modes_max(acc), 1e-300)) series_done = true;
  }
  if (!series_done && (quad_modes_max(termR) + quad_modes_max(termN)) / factorial > 1e-8)
    throw std::runtime_error("KamEngine: Lie series did not converge");

  for (auto it = acc.begin(); it != acc.end();)
    it = max_abs(it->second) < 1e-300 ? acc.erase(it) : std::next(it);

  double f_l1 = 0.0;
  int kF = 0;
  for (const auto& [key, c] : sol.F.coeffs) {
    f_l1 += std::abs(c);
    kF = std::max(kF, key.k_inf());
  }
  if (cfg_.compute_maps && f_l1 <= 1e-14 && !sol.F.empty())
    warnings_.push_back("step map within 1e-14 of the identity skipped at nu=" +
                        std::to_string(nu));
  if (cfg_.compute_maps && f_l1 > 1e-14) {
    // exp(Jc A_F) is entire: harmonic |k| of L needs ceil(|k|/kF) generator
    // factors and is bounded by a^m/m! with a the coefficient mass, so the
    // grid is sized where that tail clears 1e-16 and the trigonometric
    // interpolant of L stays accurate when re-sampled on finer grids.
    const double a = std::max(2.0 * f_l1, 1e-12);
    int m_needed = 2;
    double term = a * a / 2.0;
    while (term > 1e-16 && m_needed < 40) {
      ++m_needed;
      term *= a / m_needed;
    }
    const int kL = std::min(std::max(kF, 1) * std::max(m_needed, 2) + 2, 1000);
    const ThetaGrid grid = make_grid(P_.angles, 2 * (2 * kL + 1));
    const SymplecticMap step_map = time_one_map(decompose(sol.F, grid), FlowMode::kExactQuadratic);
    StepMap sm;
    sm.per_axis = grid.per_axis;
    sm.L_series = fourier_of_grid_mats(grid, step_map.L);
    sm.M_series.resize(P_.angles);
    for (int a = 0; a < P_.angles; ++a) {
      std::vector<CMat> ma(grid.total);
      for (long g = 0; g < grid.total; ++g) ma[g] = step_map.M[g][a];
      sm.M_series[a] = fourier_of_grid_mats(grid, ma);
    }
    step_maps_.push_back(std::move(sm));
  }

  P_ = ham_of_quad_modes(acc, P_.angles, P_.modes, K_active);
  carried_tail_ += dropped;

  if (nu + 1 <= sched_.max_nu) {
    const auto rep = certify(freqs_, sched_.alpha[nu + 1], tau, K_active, freqs_.modes());
    if (!rep.passed)
      throw ResonantDivisor(rep.worst_index, rep.worst_value, rep.worst_threshold);
  }
}

void KamEngine::step_generic(TraceRecord& rec) {
  const int nu = nu_;
  const NormParams params = step_norms();
  const double alpha = sched_.alpha[nu], tau = sched_.tau;
  const int K_active = static_cast<int>(sched_.K[nu]);

  auto [R, tail3] = taylor_truncate(P_);
  HomologicalSolution sol = solve_homological(R, freqs_, alpha, tau, K_active);
  rec.min_divisor = sol.min_divisor;

  auto [omega_hat, Omega_hat] = frequency_update(sol.N_hat, freqs_.n(), P_.modes, cfg_.freq_tol);
  for (int a = 0; a < freqs_.n(); ++a) freqs_.omega[a] += omega_hat[a];
  for (int j = 0; j < P_.modes; ++j) freqs_.Omega[j] += Omega_hat[j];
  freqs_.drift_bound = 0.0;
  for (int j = 0; j < freqs_.modes(); ++j)
    freqs_.drift_bound = std::max(
        freqs_.drift_bound,
        std::abs(freqs_.Omega[j] - (freqs_.gap_slope * (j + 1) + freqs_.gap_offset)));

  // degree-<=2 block of the Lie series; brackets with the degree-2 generator
  // preserve weighted degree, so the degree->=3 block cannot feed back into it
  TaylorHamiltonian termN = sol.N_hat, termR = R;
  TaylorHamiltonian Pnew(P_.angles, P_.modes, K_active, P_.degree_cap);
  double factorial = 1.0;
  double bracket_ratio = 0.0;
  const double R_major = majorant_norm(R, params).total;
  for (int i = 1; i <= cfg_.lie_max_terms; ++i) {
    BracketResult bn = poisson_bracket(termN, sol.F, 2, K_active);
    BracketResult br = poisson_bracket(termR, sol.F, 2, K_active);
    termN = std::move(bn.ham);
    termR = std::move(br.ham);
    if (i == 1 && R_major > 0.0)
      bracket_ratio = majorant_norm(termR, params).total / R_major;
    factorial *= (i + 1);
    double added = 0.0;
    for (const auto& [key, c] : termN.coeffs) {
      Pnew.add_term(key, c / factorial);
      added = std::max(added, std::abs(c) / factorial);
    }
    for (const auto& [key, c] : termR.coeffs) {
      Pnew.add_term(key, c * static_cast<double>(i) / factorial);
      added = std::max(added, std::abs(c) * i / factorial);
    }
    double scale = 0.0;
    for (const auto& [key, c] : Pnew.coeffs) scale = std::max(scale, std::abs(c));
    if (added < cfg_.lie_rel_tol * std::max(scale, 1e-300)) break;
    if (i == cfg_.lie_max_terms)
      throw std::runtime_error("KamEngine: Lie series did not converge");
  }

  // degree->=3 block: keys carried as-is, majorant bound grown by the measured
  // one-bracket contraction factor
  if (!tail3.empty() || carried_tail_ > 0.0) {
    double tail_major =
        majorant_norm(tail3, params).total + vector_field_majorant(tail3, params);
    tail_major = std::max(tail_major, carried_tail_);
    carried_tail_ = tail_major * (1.0 + 2.0 * std::expm1(bracket_ratio));
    for (const auto& [key, c] : tail3.coeffs) Pnew.add_term(key, c);
  }

  P_ = std::move(Pnew);

  if (nu + 1 <= sched_.max_nu) {
    const auto rep = certify(freqs_, sched_.alpha[nu + 1], tau, K_active, freqs_.modes());
    if (!rep.passed)
      throw ResonantDivisor(rep.worst_index, rep.worst_value, rep.worst_threshold);
  }
}

SymplecticMap KamEngine::composed_map() const {
  int per_axis = 2;
  for (const auto& sm : step_maps_) per_axis = std::max(per_axis, sm.per_axis);
  const ThetaGrid grid = make_grid(P_.angles, per_axis);
  SymplecticMap acc = SymplecticMap::identity(P_.angles, P_.modes, grid);
  for (const auto& sm : step_maps_) {
    SymplecticMap next = SymplecticMap::identity(P_.angles, P_.modes, grid);
    next.L = grid_mats_of_fourier(sm.L_series, grid, 2 * P_.modes, 2 * P_.modes);
    for (int a = 0; a < P_.angles; ++a) {
      auto ma = grid_mats_of_fourier(sm.M_series[a], grid, 2 * P_.modes, 2 * P_.modes);
      for (long g = 0; g < grid.total; ++g) next.M[g][a] = std::move(ma[g]);
    }
    compose_quadratic_maps(acc, next);
  }
  acc.symplecticity = symplecticity_defect(acc);
  return acc;
}

EngineResult KamEngine::run() {
  EngineResult res;
  int grow_streak = 0;
  double prev = std::numeric_limits<double>::infinity();
  while (nu_ <= sched_.max_nu && !P_.empty()) {
    const TraceRecord rec = step();
    res.trace.push_back(rec);
    if (rec.eps_majorant > prev) {
      if (++grow_streak >= 2)
        throw DivergenceError("KamEngine: majorant grew on two consecutive steps");
    } else {
      grow_streak = 0;
    }
    prev = rec.eps_majorant;
    const double post = measure().eps_majorant;
    if (post <= cfg_.target_majorant) break;
  }
  res.trace.push_back(measure());  // final state, no step
  res.converged = res.trace.back().eps_majorant <= cfg_.target_majorant || P_.empty();
  res.reached_max_nu = nu_ > sched_.max_nu;
  res.freqs = freqs_;
  res.P_final = P_;
  res.warnings = warnings_;
  if (cfg_.compute_maps && quadratic_path_) res.map = composed_map();
  return res;
}

}  // namespace kamosc
