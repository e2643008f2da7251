#include "kamosc/reducibility.hpp"

#include <cmath>

#include "kamosc/ode.hpp"

namespace kamosc {

BuildQResult build_Q(const QuasiPeriodicPotential& V, const SpectralBasis& basis, int K,
                     int grid_per_axis) {
  if (grid_per_axis < 2 * K + 2) throw std::invalid_argument("build_Q: grid too coarse");
  const int J = basis.modes, Q = basis.quad_order, n = V.angles;
  const ThetaGrid grid = make_grid(n, grid_per_axis);

  // coupling matrix at each grid point
  std::vector<RMat> B(grid.total);
  std::vector<double> samples(Q);
  for (long g = 0; g < grid.total; ++g) {
    const auto theta = grid.point(g);
    for (int q = 0; q < Q; ++q) samples[q] = V.eval(theta, basis.nodes[q]);
    B[g] = assemble_bilinear(basis, samples);
  }

  // Fourier transform every entry; enforce reality c_{-k} = conj(c_k) exactly.
  // Coefficients below the quadrature roundoff of the sampled family (a
  // Q-term accumulation, so ~Q eps relative) are numerical zeros and dropped.
  double scale = 0.0;
  for (const RMat& m : B)
    for (double v : m.a) scale = std::max(scale, std::abs(v));
  const double drop = Q * 1.2e-16 * scale;
  BuildQResult out;
  out.ham = TaylorHamiltonian(n, J, K, 2);
  std::vector<cplx> entry(grid.total);
  double total_mass = 0.0, shell_mass = 0.0, dropped = 0.0;
  for (int j = 0; j < J; ++j)
    for (int l = j; l < J; ++l) {
      for (long g = 0; g < grid.total; ++g) entry[g] = B[g](j, l);
      auto bins = dft_forward(grid, entry);
      for (long b = 0; b < grid.total; ++b) {
        const auto k = grid.bin_wave(b);
        std::vector<int> mk(k.size());
        for (std::size_t a = 0; a < k.size(); ++a) mk[a] = -k[a];
        const cplx val = 0.5 * (bins[b] + std::conj(bins[grid.bin_of(mk)]));
        if (std::abs(val) <= drop) continue;
        int kinf = 0;
        for (int v : k) kinf = std::max(kinf, std::abs(v));
        const double mass = std::abs(val) * (j == l ? 1.0 : 2.0);
        total_mass += mass;
        if (kinf > K) {
          dropped += mass;
          continue;
        }
        if (kinf == K && K > 0) shell_mass += mass;
        // ordered monomials z_j zbar_l and z_l zbar_j share the coefficient
        Monomial key;
        key.angles = static_cast<std::int8_t>(n);
        for (std::size_t a = 0; a < k.size(); ++a) key.k[a] = static_cast<std::int16_t>(k[a]);
        key.add_q(j + 1, 1);
        key.add_qbar(l + 1, 1);
        out.ham.add_term(key, val);
        if (j != l) {
          Monomial key2;
          key2.angles = static_cast<std::int8_t>(n);
          for (std::size_t a = 0; a < k.size(); ++a) key2.k[a] = static_cast<std::int16_t>(k[a]);
          key2.add_q(l + 1, 1);
          key2.add_qbar(j + 1, 1);
          out.ham.add_term(key2, val);
        }
      }
    }
  if (total_mass > 0.0) out.alias_shell_fraction = (shell_mass + dropped) / total_mass;
  out.alias_warning = out.alias_shell_fraction > 1e-10;
  return out;
}

ReducibilityResult reduce(const QuasiPeriodicPotential& V, std::span<const double> omega,
                          double eps, const ReduceConfig& cfg) {
  const int n = V.angles;
  const double tau = cfg.tau > 0 ? cfg.tau : n + 3.0;
  const double t_exp = cfg.t_exponent > 0 ? cfg.t_exponent : 2.0 * tau + n + 1.0;

  const auto dio = diophantine(omega, cfg.alpha0, tau, static_cast<int>(cfg.K0) << cfg.max_nu);
  if (!dio.passed)
    throw ResonanceExclusion(dio.worst_index,
                             "reduce: omega fails the Diophantine condition at " +
                                 dio.worst_index);

  const SpectralBasis basis =
      build_basis(cfg.J, cfg.quad_order > 0 ? cfg.quad_order : 4 * cfg.J);
  const int G = cfg.theta_grid > 0 ? cfg.theta_grid : 2 * (2 * static_cast<int>(cfg.K0) + 1);
  BuildQResult q = build_Q(V, basis, static_cast<int>(cfg.K0), G);

  TaylorHamiltonian P = std::move(q.ham);
  for (auto& [key, c] : P.coeffs) c *= eps;

  FrequencySet N0 = FrequencySet::harmonic(omega, cfg.J);
  KamSchedule sched = make_schedule(cfg.s0, cfg.alpha0, cfg.M0, tau, t_exp, cfg.c0, cfg.c1,
                                    cfg.max_nu, cfg.K0);

  EngineConfig ecfg;
  ecfg.norms = NormParams(cfg.s0, cfg.r0, cfg.beta, cfg.psi_p);
  ecfg.target_majorant = cfg.target_majorant;
  ecfg.strict_gate = cfg.strict_gate;
  ecfg.compute_maps = true;

  KamEngine engine(N0, P, sched, ecfg);
  EngineResult er = engine.run();

  ReducibilityResult res;
  res.omega.assign(omega.begin(), omega.end());
  res.Omega_star = er.freqs.Omega;
  res.map = std::move(er.map);
  res.trace = std::move(er.trace);
  res.warnings = std::move(er.warnings);
  res.converged = er.converged;
  res.alias_shell_fraction = q.alias_shell_fraction;
  if (q.alias_warning)
    res.warnings.push_back("build_Q: Fourier mass on the cutoff shell exceeds 1e-10");
  res.L_series = fourier_of_grid_mats(res.map.grid, res.map.L);

  // conjugacy check: (N0 + P0) o Phi - N*
  TaylorHamiltonian H0 = make_normal_form(omega, N0.Omega, static_cast<int>(cfg.K0));
  for (const auto& [key, c] : P.coeffs) H0.add_term(key, c);
  const int K_last = static_cast<int>(sched.K[std::min<std::size_t>(
      res.trace.empty() ? 0 : res.trace.back().nu, sched.K.size() - 1)]);
  ComposeResult comp = compose(H0, res.map, 2, K_last);
  TaylorHamiltonian defect = std::move(comp.ham);
  {
    TaylorHamiltonian Nstar =
        make_normal_form(res.omega, res.Omega_star, defect.fourier_cutoff);
    for (const auto& [key, c] : Nstar.coeffs) defect.add_term(key, -c);
  }
  NormParams params(cfg.s0 / 2.0, cfg.r0, cfg.beta, cfg.psi_p);
  res.conjugacy_residual =
      majorant_norm(defect, params).total + comp.fourier_tail_mass;
  return res;
}

std::vector<cplx> oracle_x_independent(
    const std::vector<std::pair<std::vector<int>, cplx>>& fourier_a,
    std::span<const double> omega, double eps, const ThetaGrid& grid, double alpha, double tau) {
  std::vector<cplx> W(grid.total);
  for (const auto& [k, a_k] : fourier_a) {
    bool zero = true;
    for (int v : k) zero = zero && v == 0;
    if (zero && std::abs(a_k) > 1e-14)
      throw std::invalid_argument("oracle_x_independent: nonzero angle average");
  }
  for (long g = 0; g < grid.total; ++g) {
    const auto theta = grid.point(g);
    cplx expo = 0.0;
    for (const auto& [k, a_k] : fourier_a) {
      bool zero = true;
      double kw = 0.0, phase = 0.0;
      int kl1 = 0;
      for (std::size_t a = 0; a < k.size(); ++a) {
        zero = zero && k[a] == 0;
        kw += k[a] * omega[a];
        phase += k[a] * theta[a];
        kl1 += std::abs(k[a]);
      }
      if (zero) continue;
      const double threshold =
          alpha > 0.0 ? 2.0 * M_PI * alpha / std::pow(static_cast<double>(kl1), tau - 1.0)
                      : 1e-12;
      if (std::abs(kw) < threshold)
        throw ResonanceExclusion("k.omega",
                                 "oracle_x_independent: resonant harmonic, k.omega = " +
                                     std::to_string(kw));
      expo += a_k / kw * (std::exp(cplx(0.0, phase)) - 1.0);
    }
    W[g] = std::exp(eps * expo);
  }
  return W;
}

Trajectory integrate_schrodinger(const QuasiPeriodicPotential& V, std::span<const double> omega,
                                 double eps, std::span<const cplx> z0, double T, double tol,
                                 const SpectralBasis& basis, int K, int grid_per_axis,
                                 int samples) {
  if (tol > 1e-9) throw std::invalid_argument("integrate_schrodinger: tol <= 1e-9 required");
  const int J = basis.modes, n = V.angles;
  if (static_cast<int>(z0.size()) != J)
    throw std::invalid_argument("integrate_schrodinger: state length mismatch");

  // Fourier family of coupling matrices
  const ThetaGrid grid = make_grid(n, grid_per_axis);
  std::vector<RMat> B(grid.total);
  std::vector<double> vs(basis.quad_order);
  for (long g = 0; g < grid.total; ++g) {
    const auto theta = grid.point(g);
    for (int q = 0; q < basis.quad_order; ++q) vs[q] = V.eval(theta, basis.nodes[q]);
    B[g] = assemble_bilinear(basis, vs);
  }
  std::vector<std::pair<std::vector<int>, CMat>> Bk;
  {
    std::vector<CMat> Bc(grid.total, CMat(J, J));
    for (long g = 0; g < grid.total; ++g)
      for (int i = 0; i < J; ++i)
        for (int j = 0; j < J; ++j) Bc[g](i, j) = B[g](i, j);
    Bk = fourier_of_grid_mats(grid, Bc, 1e-16);
    std::erase_if(Bk, [&](const auto& e) {
      int kinf = 0;
      for (int v : e.first) kinf = std::max(kinf, std::abs(v));
      return kinf > K;
    });
  }

  auto rhs = [&](double t, std::span<const cplx> z, std::span<cplx> dz) {
    for (int j = 0; j < J; ++j) dz[j] = cplx(0.0, -(2.0 * j + 1.0)) * z[j];
    std::vector<cplx> Vz(J, 0.0);
    for (const auto& [k, mat] : Bk) {
      double phase = 0.0;
      for (std::size_t a = 0; a < k.size(); ++a) phase += k[a] * omega[a] * t;
      const cplx ph = std::exp(cplx(0.0, phase));
      for (int i = 0; i < J; ++i) {
        cplx s = 0.0;
        for (int j = 0; j < J; ++j) s += mat(i, j) * z[j];
        Vz[i] += ph * s;
      }
    }
    for (int j = 0; j < J; ++j) dz[j] += cplx(0.0, -eps) * Vz[j];
  };

  Trajectory traj;
  const double dt = T / samples;
  double next_sample = 0.0;
  auto observer = [&](double t, std::span<const cplx> z) {
    if (t + 1e-12 < next_sample) return;
    next_sample += dt;
    traj.times.push_back(t);
    traj.states.emplace_back(z.begin(), z.end());
    double n0 = 0.0, n2 = 0.0;
    for (int j = 0; j < J; ++j) {
      const double a2 = std::norm(z[j]);
      n0 += a2;
      n2 += a2 * std::pow(j + 1.0, 2.0);
    }
    traj.norm_p0.push_back(std::sqrt(n0));
    traj.norm_p2.push_back(std::sqrt(n2));
  };

  std::vector<cplx> state(z0.begin(), z0.end());
  integrate_dopri5(rhs, state, 0.0, T, tol, observer);
  if (traj.times.empty() || traj.times.back() < T) observer(T, state);
  return traj;
}

KamPrediction kam_predicted_solution(const ReducibilityResult& result, std::span<const cplx> z0,
                                     double t) {
  const int J = result.map.modes, zdim = 2 * J;
  if (static_cast<int>(z0.size()) != J)
    throw std::invalid_argument("kam_predicted_solution: state length mismatch");

  std::vector<double> theta0(result.omega.size(), 0.0);
  CMat L0(zdim, zdim);
  {
    auto mats = grid_mats_of_fourier(result.L_series, make_grid(result.map.angles, 1), zdim, zdim);
    L0 = mats[0];
  }
  KamPrediction pred;
  pred.condition_L0 = one_norm(L0) * one_norm(inverse(L0));
  if (pred.condition_L0 > 1e8)
    throw NumericalIntegrityError("kam_predicted_solution: ill-conditioned L(0)");

  // engine coordinates are the conjugate pair: w = conj(z_physical)
  CMat Z0(zdim, 1);
  for (int j = 0; j < J; ++j) {
    Z0(j, 0) = std::conj(z0[j]);
    Z0(J + j, 0) = z0[j];
  }
  CMat Zp = solve(L0, Z0);
  for (int j = 0; j < J; ++j) {
    const double om = result.Omega_star[j];
    Zp(j, 0) *= std::exp(cplx(0.0, om * t));
    Zp(J + j, 0) *= std::exp(cplx(0.0, -om * t));
  }
  std::vector<double> theta_t(result.omega.size());
  for (std::size_t a = 0; a < result.omega.size(); ++a) theta_t[a] = result.omega[a] * t;
  CMat Lt(zdim, zdim);
  for (const auto& [k, mat] : result.L_series) {
    double phase = 0.0;
    for (std::size_t a = 0; a < k.size(); ++a) phase += k[a] * theta_t[a];
    add_scaled(Lt, std::exp(cplx(0.0, phase)), mat);
  }
  CMat Zt = matmul(Lt, Zp);
  pred.z.resize(J);
  for (int j = 0; j < J; ++j) pred.z[j] = std::conj(Zt(j, 0));
  return pred;
}

}  // namespace kamosc
