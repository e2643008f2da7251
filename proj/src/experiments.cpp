#include "kamosc/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include <json.hpp>

#include "kamosc/kernels.hpp"
#include "kamosc/nls.hpp"
#include "kamosc/variational.hpp"

namespace kamosc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

constexpr double kGoldenOmega = 2.0 * std::numbers::pi * 0.6180339887498948482;

int g_threads = 1;  // recorded in the manifest; the engine is serial

struct CsvWriter {
  std::ofstream os;
  CsvWriter(const fs::path& path, const std::string& header) : os(path) {
    if (!os) throw std::runtime_error("cannot open output file: " + path.string());
    os << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << "\n";
  }
};

void write_plotdata(const fs::path& path,
                    const std::vector<std::tuple<std::string, double, double>>& rows) {
  CsvWriter w(path, "series,x,y");
  for (const auto& [s, x, y] : rows) w.row({s, format_full(x), format_full(y)});
}

json config_echo(const ConfigSection& section) {
  json j = json::object();
  for (const auto& [k, v] : section.consumed()) j[k] = v;
  return j;
}

void write_manifest(const fs::path& path, const std::string& experiment,
                    const ConfigSection& section, double wall_seconds, json extra) {
  json m;
  m["experiment"] = experiment;
  m["config"] = config_echo(section);
  m["version"] = "0.1.0";
  m["kernel_backend"] = kernels::active_backend();
  m["threads"] = g_threads;
  m["wall_seconds"] = wall_seconds;
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream os(path);
  os << m.dump(2) << "\n";
}

std::vector<double> resolve_omega(ConfigSection& s, int n, double alpha, double tau, int K) {
  const std::string spec = s.take_or("omega", "golden");
  if (spec == "golden") {
    if (n != 1) throw ConfigError("omega = golden requires n = 1");
    return {kGoldenOmega};
  }
  if (spec == "sample") {
    const auto seed = static_cast<std::uint64_t>(s.integer_or("omega_seed", 1));
    const long retries = s.integer_or("omega_retries", 0);
    for (long t = 0;; ++t) {
      std::vector<double> omega(n);
      for (int a = 0; a < n; ++a)
        omega[a] = 2.0 * std::numbers::pi * counter_u01(seed, a, t);
      if (diophantine(omega, alpha, tau, K).passed) return omega;
      if (t >= retries)
        throw ResonanceExclusion("omega-sample", "sampled omega failed the Diophantine test");
    }
  }
  std::vector<double> omega;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) omega.push_back(std::stod(item));
  if (static_cast<int>(omega.size()) != n)
    throw ConfigError("omega list length does not match n");
  return omega;
}

void dump_trace_csv(const fs::path& path, const std::vector<TraceRecord>& trace) {
  CsvWriter w(path, "nu,eps_majorant,alpha_nu,sigma_nu,K_nu,min_divisor,freq_drift,seconds");
  for (const auto& r : trace)
    w.row({std::to_string(r.nu), format_full(r.eps_majorant), format_full(r.alpha_nu),
           format_full(r.sigma_nu), std::to_string(r.K_nu), format_full(r.min_divisor),
           format_full(r.freq_drift), format_full(r.seconds)});
}

ReduceConfig reduce_config_from(ConfigSection& s, int n) {
  ReduceConfig cfg;
  cfg.J = static_cast<int>(s.integer_or("J", 32));
  cfg.quad_order = static_cast<int>(s.integer_or("quad_order", -1));
  cfg.K0 = s.integer_or("K0", 8);
  cfg.alpha0 = s.number_or("alpha0", 0.01);
  cfg.tau = s.number_or("tau", n + 3.0);
  cfg.s0 = s.number_or("s0", 0.4);
  cfg.beta = s.number_or("beta", 0.25);
  cfg.psi_p = s.number_or("psi_p", 2.0);
  cfg.r0 = s.number_or("r0", 1.0);
  cfg.c0 = s.number_or("c0", 8.0);
  cfg.c1 = s.number_or("c1", 8.0);
  cfg.max_nu = static_cast<int>(s.integer_or("max_nu", 5));
  cfg.target_majorant = s.number_or("target", 1e-12);
  cfg.strict_gate = s.flag_or("strict_gate", false);
  cfg.theta_grid = static_cast<int>(s.integer_or("theta_grid", -1));
  return cfg;
}

int run_reduce_like(const std::string& experiment, ConfigSection s, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(s.integer_or("n", 1));
  const std::string pot_name =
      s.take_or("potential", experiment == "oracle" ? "cos_theta" : "cos_theta_lorentz");
  const double eps = s.number_or("eps", 0.01);
  ReduceConfig cfg = reduce_config_from(s, n);
  const auto omega = resolve_omega(s, n, cfg.alpha0, cfg.tau > 0 ? cfg.tau : n + 3.0,
                                   static_cast<int>(cfg.K0) << cfg.max_nu);
  // Lipschitz-in-omega diagnostics: rerun on a grid of nearby frequencies and
  // report the 2 beta weighted finite-difference quotients (never gates)
  std::vector<double> lip_offsets = s.numbers_or("lipschitz_offsets", {});
  s.reject_unknown();

  const PotentialSpec pspec = make_potential(pot_name, n);
  if (experiment == "oracle" && !pspec.x_independent)
    throw ConfigError("oracle experiment requires an x-independent potential");

  const ReducibilityResult res = reduce(pspec.pot, omega, eps, cfg);

  fs::create_directories(out);
  {
    CsvWriter w(out / "omega_star.csv", "j,omega_star,delta");
    for (int j = 1; j <= static_cast<int>(res.Omega_star.size()); ++j)
      w.row({std::to_string(j), format_full(res.Omega_star[j - 1]),
             format_full(res.Omega_star[j - 1] - (2.0 * j - 1.0))});
  }
  dump_trace_csv(out / "trace.csv", res.trace);
  {
    std::ofstream os(out / "map_grid.txt");
    dump_map_grid(res.map, os);
  }
  {
    std::ofstream os(out / "map_fourier.txt");
    dump_map_fourier(res.map, os);
  }
  std::vector<std::tuple<std::string, double, double>> plot;
  for (const auto& r : res.trace)
    plot.emplace_back("log10_eps", r.nu, std::log10(std::max(r.eps_majorant, 1e-320)));
  write_plotdata(out / "plotdata.csv", plot);

  json extra;
  extra["omega"] = omega;
  extra["converged"] = res.converged;
  extra["conjugacy_residual"] = res.conjugacy_residual;
  extra["alias_shell_fraction"] = res.alias_shell_fraction;
  extra["symplecticity_defect"] = res.map.symplecticity;
  extra["warnings"] = res.warnings;
  double max_delta = 0.0;
  for (int j = 1; j <= static_cast<int>(res.Omega_star.size()); ++j)
    max_delta = std::max(max_delta, std::abs(res.Omega_star[j - 1] - (2.0 * j - 1.0)));
  extra["max_abs_delta_Omega"] = max_delta;

  if (!lip_offsets.empty() && n == 1) {
    CsvWriter w(out / "lipschitz.csv", "offset,quotient_2beta");
    for (double off : lip_offsets) {
      if (off == 0.0) continue;
      const std::vector<double> omega2{omega[0] + off};
      const ReducibilityResult r2 = reduce(pspec.pot, omega2, eps, cfg);
      double quot = 0.0;
      for (int j = 1; j <= cfg.J; ++j)
        quot = std::max(quot, std::pow(static_cast<double>(j), 2.0 * cfg.beta) *
                                  std::abs(r2.Omega_star[j - 1] - res.Omega_star[j - 1]) /
                                  std::abs(off));
      w.row({format_full(off), format_full(quot)});
    }
  }

  if (experiment == "oracle") {
    const ThetaGrid grid = res.map.grid;
    const auto W = oracle_x_independent(pspec.flat, omega, eps, grid);
    // one global constant phase fitted on the first diagonal entry
    cplx acc = 0.0;
    for (long g = 0; g < grid.total; ++g) acc += res.map.L[g](0, 0) * std::conj(W[g]);
    const cplx phase = std::abs(acc) > 0 ? acc / std::abs(acc) : cplx(1.0, 0.0);
    const int J = res.map.modes;
    double offdiag = 0.0, wmis = 0.0;
    CsvWriter w(out / "oracle_diff.csv", "j,abs_delta_Omega,w_mismatch,offdiag_max");
    for (int j = 0; j < J; ++j) {
      double wj = 0.0, oj = 0.0;
      for (long g = 0; g < grid.total; ++g) {
        wj = std::max(wj, std::abs(res.map.L[g](j, j) - phase * W[g]));
        for (int l = 0; l < 2 * J; ++l)
          if (l != j && l != J + j) oj = std::max(oj, std::abs(res.map.L[g](j, l)));
      }
      w.row({std::to_string(j + 1),
             format_full(std::abs(res.Omega_star[j] - (2.0 * j + 1.0))), format_full(wj),
             format_full(oj)});
      offdiag = std::max(offdiag, oj);
      wmis = std::max(wmis, wj);
    }
    extra["global_phase_re"] = phase.real();
    extra["global_phase_im"] = phase.imag();
    extra["w_mismatch_max"] = wmis;
    extra["offdiag_max"] = offdiag;
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out / "manifest.json", experiment, s, wall, extra);
  return kOk;
}

int run_spectrum(ConfigSection s, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(s.integer_or("n", 1));
  const int J = static_cast<int>(s.integer_or("J", 32));
  const int Q = static_cast<int>(s.integer_or("quad_order", 4 * J));
  const double nu = s.number_or("nu", 0.01);
  const auto seed = static_cast<std::uint64_t>(s.integer_or("seed", 7));
  const int k_max = static_cast<int>(s.integer_or("k_max", J));
  std::vector<double> xi = s.numbers_or("xi", std::vector<double>(n, 1.0));
  const int scan_K = static_cast<int>(s.integer_or("scan_K", 10));
  const int scan_J = static_cast<int>(s.integer_or("scan_J", std::min(16, J - n)));
  const int samples = static_cast<int>(s.integer_or("samples", 100));
  const double alpha = s.number_or("alpha", 1e-4 * nu);
  const double tau = s.number_or("tau", n + 3.0);
  s.reject_unknown();
  if (static_cast<int>(xi.size()) != n) throw ConfigError("xi length does not match n");

  const SpectralBasis basis = build_basis(J, Q);
  const PotentialFamily family = make_family(n, basis, seed, k_max);
  const PerturbedSpectrum spec = perturbed_spectrum(family, nu, xi, basis);

  fs::create_directories(out);
  {
    // first-order prediction 2j-1 + nu sum_k xi_k integral (f_k + d_{1k} g) h_j^2
    const int Qn = basis.quad_order;
    CsvWriter w(out / "lambda.csv", "j,lambda,first_order,defect,phi_minus_h");
    for (int j = 1; j <= J; ++j) {
      double corr = 0.0;
      for (int k = 1; k <= n; ++k) {
        double integ = 0.0;
        for (int q = 0; q < Qn; ++q) {
          double fk = 0.0;
          for (int i = 0; i < n; ++i) {
            const double hi = basis.value(i + 1, q);
            fk += family.dual_coeffs[k - 1][i] * hi * hi;
          }
          if (k == 1) fk += family_g_at(family, basis.nodes[q]);
          const double hj = basis.value(j, q);
          integ += basis.weights[q] * fk * hj * hj;
        }
        corr += xi[k - 1] * integ;
      }
      const double first = 2.0 * j - 1.0 + nu * corr;
      double dist = 0.0;
      for (int c = 0; c < J; ++c) {
        const double d = spec.phi(j - 1, c) - (c == j - 1 ? 1.0 : 0.0);
        dist += d * d;
      }
      w.row({std::to_string(j), format_full(spec.lambda[j - 1]), format_full(first),
             format_full(spec.lambda[j - 1] - first), format_full(std::sqrt(dist))});
    }
  }
  const NondegeneracyReport rep =
      nondegeneracy_scan(family, nu, scan_K, scan_J, samples, seed, basis, alpha, tau);
  {
    CsvWriter w(out / "nondegeneracy.csv",
                "min_dist_single,min_dist_pair,min_mu_diag,max_mu_residual,min_divisor,"
                "excluded_fraction,samples");
    w.row({format_full(rep.min_dist_single), format_full(rep.min_dist_pair),
           format_full(rep.min_mu_diag), format_full(rep.max_mu_residual),
           format_full(rep.min_divisor), format_full(rep.excluded_fraction),
           std::to_string(rep.samples)});
  }
  {
    CsvWriter w(out / "derivative_check.csv", "j,k,analytic,finite_difference,rel_err");
    for (int j = 1; j <= std::min(J, 2 * n + 4); ++j)
      for (int k = 1; k <= n; ++k) {
        const auto [an, fd] = frequency_derivative_check(family, nu, xi, j, k, basis);
        const double rel = std::abs(an - fd) / std::max(std::abs(an), 1e-300);
        w.row({std::to_string(j), std::to_string(k), format_full(an), format_full(fd),
               format_full(rel)});
      }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json extra;
  extra["seed"] = seed;
  write_manifest(out / "manifest.json", "spectrum", s, wall, extra);
  return kOk;
}

int run_nls(ConfigSection s, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(s.integer_or("n", 1));
  const int J = static_cast<int>(s.integer_or("J", 24));
  const int Q = static_cast<int>(s.integer_or("quad_order", 4 * J));
  const int m = static_cast<int>(s.integer_or("m", 1));
  const double nu = s.number_or("nu", 0.02);
  const double eps = s.number_or("eps", 1e-3);
  const auto seed = static_cast<std::uint64_t>(s.integer_or("seed", 7));
  std::vector<double> xi = s.numbers_or("xi", std::vector<double>(n, 0.7));
  std::vector<double> I = s.numbers_or("I", std::vector<double>(n, 1.0));
  NlsRunConfig cfg;
  cfg.alpha0 = s.number_or("alpha0", 1e-4 * nu);
  cfg.tau = s.number_or("tau", n + 3.0);
  cfg.s0 = s.number_or("s0", 0.4);
  cfg.beta = s.number_or("beta", 0.25);
  cfg.r0 = s.number_or("r0", 0.1);
  cfg.K0 = s.integer_or("K0", 4);
  cfg.max_nu = static_cast<int>(s.integer_or("max_nu", 3));
  cfg.degree_cap = static_cast<int>(s.integer_or("degree_cap", 4));
  cfg.C0 = s.number_or("C0", 10.0);
  s.reject_unknown();

  const SpectralBasis basis = build_basis(J, Q);
  const PotentialFamily family = make_family(n, basis, seed, J);
  const NlsRunReport rep = nls_kam_run(family, I, xi, nu, eps, m, basis, cfg);

  fs::create_directories(out);
  dump_trace_csv(out / "trace.csv", rep.trace);
  {
    CsvWriter w(out / "nls_report.csv",
                "first_step_ratio,drift_omega,drift_over_nu,nu,eps,m");
    w.row({format_full(rep.first_step_ratio), format_full(rep.drift_omega),
           format_full(rep.drift_over_nu), format_full(nu), format_full(eps),
           std::to_string(m)});
  }
  std::vector<std::tuple<std::string, double, double>> plot;
  for (const auto& r : rep.trace)
    plot.emplace_back("log10_eps_deg2", r.nu, std::log10(std::max(r.eps_deg2, 1e-320)));
  write_plotdata(out / "plotdata.csv", plot);

  json extra;
  extra["warnings"] = rep.warnings;
  extra["seed"] = seed;
  extra["omega0"] = rep.omega0;
  extra["omega_star"] = rep.omega_star;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out / "manifest.json", "nls", s, wall, extra);
  return kOk;
}

int run_variational(ConfigSection s, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  VariationalProblem prob;
  prob.mu = s.number_or("mu", 0.5);
  prob.p = s.number_or("p", 3.0);
  prob.count = static_cast<int>(s.integer_or("count", 3));
  prob.modes = static_cast<int>(s.integer_or("J", 48));
  prob.tol = s.number_or("tol", 1e-6);
  prob.max_iter = static_cast<int>(s.integer_or("max_iter", 20000));
  prob.restarts = static_cast<int>(s.integer_or("restarts", 3));
  prob.focusing = s.flag_or("focusing", false);
  prob.eps_focus = s.number_or("eps_focus", 0.0);
  const auto seed = static_cast<std::uint64_t>(s.integer_or("seed", 11));
  const double T_orbit = s.number_or("orbit_T", 10.0);
  const double orbit_tol = s.number_or("orbit_tol", 1e-11);
  const int Q = static_cast<int>(s.integer_or("quad_order", 4 * prob.modes));
  s.reject_unknown();

  const SpectralBasis basis = build_basis(prob.modes, Q);
  const auto minimizers = minimize(prob, basis, seed);

  fs::create_directories(out);
  CsvWriter w(out / "variational.csv", "k,lambda,energy,residual,orbit_deviation");
  int k = 0;
  for (const auto& mn : minimizers) {
    ++k;
    const double res = residual(mn.coeffs, mn.lambda, prob.p, basis);
    double orbit = std::numeric_limits<double>::quiet_NaN();
    if (res <= prob.tol)
      orbit = verify_periodic_orbit(mn.coeffs, mn.lambda, prob.p, T_orbit, orbit_tol, basis);
    w.row({std::to_string(k), format_full(mn.lambda), format_full(mn.energy),
           format_full(res), format_full(orbit)});
    std::ofstream cd(out / ("minimizer_" + std::to_string(k) + ".txt"));
    for (int j = 0; j < prob.modes; ++j)
      cd << (j + 1) << " " << format_full(mn.coeffs[j]) << "\n";
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json extra;
  extra["seed"] = seed;
  write_manifest(out / "manifest.json", "variational", s, wall, extra);
  return kOk;
}

int run_measure(ConfigSection s, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(s.integer_or("n", 1));
  const int K = static_cast<int>(s.integer_or("K", 30));
  const int J = static_cast<int>(s.integer_or("J", 32));
  const double tau = s.number_or("tau", n + 3.0);
  const int samples = static_cast<int>(s.integer_or("samples", 2000));
  const auto seed = static_cast<std::uint64_t>(s.integer_or("seed", 1));
  const auto alphas = s.numbers_or("alphas", {0.4, 0.2, 0.1, 0.05});
  s.reject_unknown();

  std::vector<double> lo(n, 0.0), hi(n, 2.0 * std::numbers::pi);
  fs::create_directories(out);
  CsvWriter w(out / "measure.csv", "alpha,fraction_excluded,samples,seed,K,J,tau");
  std::vector<std::tuple<std::string, double, double>> plot;
  for (double alpha : alphas) {
    const MeasureSample ms = excluded_measure(lo, hi, alpha, tau, K, J,
                                              OmegaModel::kConstantGap, samples, seed);
    w.row({format_full(ms.alpha), format_full(ms.fraction_excluded),
           std::to_string(ms.samples), std::to_string(ms.seed), std::to_string(ms.K),
           std::to_string(ms.J), format_full(ms.tau)});
    plot.emplace_back("excluded_fraction", ms.alpha, ms.fraction_excluded);
  }
  write_plotdata(out / "plotdata.csv", plot);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out / "manifest.json", "measure", s, wall, json::object());
  return kOk;
}

}  // namespace

PotentialSpec make_potential(const std::string& name, int angles) {
  PotentialSpec spec;
  spec.pot.angles = angles;
  if (name == "cos_theta") {
    spec.pot.eval = [](std::span<const double> theta, double) { return std::cos(theta[0]); };
    spec.pot.decay_delta = 0.0;
    spec.x_independent = true;
    spec.flat = {{std::vector<int>{1}, cplx(0.5, 0.0)}, {std::vector<int>{-1}, cplx(0.5, 0.0)}};
    for (auto& [k, c] : spec.flat) k.resize(angles, 0);
  } else if (name == "two_harmonic_flat") {
    spec.pot.eval = [](std::span<const double> theta, double) {
      return std::cos(theta[0]) + 0.4 * std::cos(2.0 * theta[0]);
    };
    spec.pot.decay_delta = 0.0;
    spec.x_independent = true;
    spec.flat = {{std::vector<int>{1}, cplx(0.5, 0.0)},
                 {std::vector<int>{-1}, cplx(0.5, 0.0)},
                 {std::vector<int>{2}, cplx(0.2, 0.0)},
                 {std::vector<int>{-2}, cplx(0.2, 0.0)}};
    for (auto& [k, c] : spec.flat) k.resize(angles, 0);
  } else if (name == "cos_theta_lorentz") {
    spec.pot.eval = [](std::span<const double> theta, double x) {
      return std::cos(theta[0]) / (1.0 + x * x);
    };
    spec.pot.decay_delta = 1.0;
  } else if (name == "two_harmonic_lorentz") {
    spec.pot.eval = [](std::span<const double> theta, double x) {
      return (std::cos(theta[0]) + 0.3 * std::sin(2.0 * theta[0])) / (1.0 + x * x);
    };
    spec.pot.decay_delta = 1.0;
  } else {
    throw ConfigError("unknown potential: " + name);
  }
  return spec;
}

int run_experiment(const std::string& name, ConfigSection section, const std::string& outdir,
                   int threads) {
  g_threads = threads;  // worker cap; the engine itself is serial
  try {
    if (name == "reduce" || name == "oracle") return run_reduce_like(name, std::move(section), outdir);
    if (name == "spectrum") return run_spectrum(std::move(section), outdir);
    if (name == "nls") return run_nls(std::move(section), outdir);
    if (name == "variational") return run_variational(std::move(section), outdir);
    if (name == "measure") return run_measure(std::move(section), outdir);
    std::cerr << "unknown experiment: " << name << "\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ResonanceExclusion& e) {
    std::cerr << "resonance exclusion: " << e.what() << "\n";
    return kResonanceExclusion;
  } catch (const ResonantDivisor& e) {
    std::cerr << "resonance exclusion: " << e.what() << "\n";
    return kResonanceExclusion;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const NumericalIntegrityError& e) {
    std::cerr << "numerical integrity failure: " << e.what() << "\n";
    return kIntegrityFailure;
  } catch (const NonRealFrequency& e) {
    std::cerr << "numerical integrity failure: " << e.what() << "\n";
    return kIntegrityFailure;
  }
}

}  // namespace kamosc
