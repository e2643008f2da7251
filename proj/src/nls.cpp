#include "kamosc/nls.hpp"

#include <cmath>

namespace kamosc {

namespace {

/// integral h_{i+1}^2 h_{k+1}^2 (0-based arguments), by quadrature.
RMat squares_gram(int n, const SpectralBasis& basis) {
  const int Q = basis.quad_order;
  RMat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = i; k < n; ++k) {
      double s = 0.0;
      for (int q = 0; q < Q; ++q) {
        const double hi = basis.value(i + 1, q), hk = basis.value(k + 1, q);
        s += basis.weights[q] * hi * hi * hk * hk;
      }
      G(i, k) = s;
      G(k, i) = s;
    }
  return G;
}

}  // namespace

std::vector<std::vector<double>> dual_basis(int n, const SpectralBasis& basis) {
  if (n < 1) throw std::invalid_argument("dual_basis: n >= 1 required");
  if (basis.modes < n) throw std::invalid_argument("dual_basis: basis too small");
  const RMat G = squares_gram(n, basis);
  CMat Gc(n, n), E = CMat::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Gc(i, j) = G(i, j);
  const CMat C = solve(Gc, E);  // columns solve G c = e_j
  std::vector<std::vector<double>> coeffs(n, std::vector<double>(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) coeffs[j][i] = C(i, j).real();
  return coeffs;
}

PotentialFamily make_family(int n, const SpectralBasis& basis, std::uint64_t seed, int k_max) {
  PotentialFamily fam;
  fam.n = n;
  fam.seed = seed;
  fam.k_max = k_max;
  fam.dual_coeffs = dual_basis(n, basis);
  fam.alpha_g.resize(std::max(0, k_max - n));
  for (int k = n + 1; k <= k_max; ++k)
    fam.alpha_g[k - n - 1] = counter_u01(seed, 0, k) - 0.5;
  return fam;
}

double family_g_at(const PotentialFamily& family, double x) {
  if (family.alpha_g.empty()) return 0.0;
  const int top = 2 * family.k_max - 1;
  std::vector<double> h(top);
  hermite_eval(top, std::sqrt(2.0) * x, h);
  double g = 0.0;
  for (int k = family.n + 1; k <= family.k_max; ++k)
    g += family.alpha_g[k - family.n - 1] * std::exp(-static_cast<double>(k)) * h[2 * k - 2];
  return g;
}

std::vector<double> family_potential_at_nodes(const PotentialFamily& family,
                                              std::span<const double> xi,
                                              const SpectralBasis& basis) {
  if (static_cast<int>(xi.size()) != family.n)
    throw std::invalid_argument("family_potential_at_nodes: xi size mismatch");
  const int Q = basis.quad_order;
  std::vector<double> v(Q, 0.0);
  for (int q = 0; q < Q; ++q) {
    double s = 0.0;
    for (int k = 0; k < family.n; ++k) {
      double fk = 0.0;
      for (int i = 0; i < family.n; ++i) {
        const double hi = basis.value(i + 1, q);
        fk += family.dual_coeffs[k][i] * hi * hi;
      }
      s += xi[k] * fk;
    }
    s += xi[0] * family_g_at(family, basis.nodes[q]);
    v[q] = s;
  }
  return v;
}

PerturbedSpectrum perturbed_spectrum(const PotentialFamily& family, double nu,
                                     std::span<const double> xi, const SpectralBasis& basis) {
  if (nu < 0.0) throw std::invalid_argument("perturbed_spectrum: nu >= 0 required");
  for (double x : xi)
    if (x < -1.0 || x > 1.0)
      throw std::invalid_argument("perturbed_spectrum: xi outside [-1,1]^n");
  const int J = basis.modes;
  RMat A(J, J);
  if (nu > 0.0) {
    const auto v = family_potential_at_nodes(family, xi, basis);
    A = assemble_bilinear(basis, v);
    for (double& x : A.a) x *= nu;
  }
  for (int j = 0; j < J; ++j) A(j, j) += 2.0 * j + 1.0;

  PerturbedSpectrum spec;
  spec.nu = nu;
  spec.xi.assign(xi.begin(), xi.end());
  sym_eig(A, spec.lambda, spec.phi);
  for (int j = 0; j < J; ++j)
    if (spec.phi(j, j) < 0.0)
      for (int c = 0; c < J; ++c) spec.phi(j, c) = -spec.phi(j, c);
  for (int j = 0; j + 1 < J; ++j)
    if (!(spec.lambda[j] < spec.lambda[j + 1]))
      throw std::runtime_error("perturbed_spectrum: eigenvalues not strictly increasing");
  return spec;
}

std::pair<double, double> frequency_derivative_check(const PotentialFamily& family, double nu,
                                                     std::span<const double> xi, int j, int k,
                                                     const SpectralBasis& basis) {
  const int Q = basis.quad_order;
  const PerturbedSpectrum spec = perturbed_spectrum(family, nu, xi, basis);

  // analytic: nu * integral (f_k + delta_{1k} g) phi_j^2
  std::vector<double> w(Q);
  for (int q = 0; q < Q; ++q) {
    double fk = 0.0;
    for (int i = 0; i < family.n; ++i) {
      const double hi = basis.value(i + 1, q);
      fk += family.dual_coeffs[k - 1][i] * hi * hi;
    }
    if (k == 1) fk += family_g_at(family, basis.nodes[q]);
    double phi = 0.0;
    for (int c = 0; c < basis.modes; ++c) phi += spec.phi(j - 1, c) * basis.value(c + 1, q);
    w[q] = basis.weights[q] * fk * phi * phi;
  }
  double analytic = 0.0;
  for (int q = 0; q < Q; ++q) analytic += w[q];
  analytic *= nu;

  // second-order stencil kept inside Pi = [-1,1]^n: central where possible,
  // one-sided at the boundary
  const double h = 1e-4;
  auto lam = [&](double x) {
    std::vector<double> xs(xi.begin(), xi.end());
    xs[k - 1] = x;
    return perturbed_spectrum(family, nu, xs, basis).lambda[j - 1];
  };
  const double x0 = xi[k - 1];
  double fd;
  if (x0 + h <= 1.0 && x0 - h >= -1.0) {
    fd = (lam(x0 + h) - lam(x0 - h)) / (2.0 * h);
  } else {
    const double dir = x0 + h > 1.0 ? -1.0 : 1.0;
    fd = dir * (-3.0 * lam(x0) + 4.0 * lam(x0 + dir * h) - lam(x0 + 2.0 * dir * h)) /
         (2.0 * h);
  }
  return {analytic, fd};
}

NondegeneracyReport nondegeneracy_scan(const PotentialFamily& family, double nu, int K, int J,
                                       int samples, std::uint64_t seed,
                                       const SpectralBasis& basis, double alpha, double tau) {
  NondegeneracyReport rep;
  const int n = family.n, Q = basis.quad_order;

  // I_p = integral (f_1 + g) h_{n+p}^2
  std::vector<double> f1g(Q);
  for (int q = 0; q < Q; ++q) {
    double f1 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double hi = basis.value(i + 1, q);
      f1 += family.dual_coeffs[0][i] * hi * hi;
    }
    f1g[q] = f1 + family_g_at(family, basis.nodes[q]);
  }
  auto dist_to_int = [](double x) { return std::abs(x - std::round(x)); };
  const int pmax = std::min(J, basis.modes - n);
  std::vector<double> Ip(pmax + 1, 0.0);
  rep.min_dist_single = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= pmax; ++p) {
    double s = 0.0;
    for (int q = 0; q < Q; ++q) {
      const double h = basis.value(n + p, q);
      s += basis.weights[q] * f1g[q] * h * h;
    }
    Ip[p] = s;
    rep.min_dist_single = std::min(rep.min_dist_single, dist_to_int(s));
  }
  rep.min_dist_pair = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= pmax; ++p)
    for (int q = 1; q < p; ++q) {
      rep.min_dist_pair = std::min(rep.min_dist_pair, dist_to_int(Ip[p] + Ip[q]));
      rep.min_dist_pair = std::min(rep.min_dist_pair, dist_to_int(Ip[p] - Ip[q]));
    }

  // mu_{kj} of the h_j^2 expansion over h_{2k-1}(sqrt(2) x), diagonal and
  // reconstruction checks for the accessible range
  const int mu_range = std::min(n + pmax, (basis.quad_order / 2 - 1) / 2);
  rep.min_mu_diag = std::numeric_limits<double>::infinity();
  rep.max_mu_residual = 0.0;
  std::vector<double> hre(2 * mu_range);
  for (int j = 1; j <= mu_range; ++j) {
    std::vector<double> mu(j + 1, 0.0);
    std::vector<double> recon(Q, 0.0);
    for (int k = 1; k <= j; ++k) {
      double s = 0.0;
      for (int q = 0; q < Q; ++q) {
        hermite_eval(2 * k - 1, std::sqrt(2.0) * basis.nodes[q], hre);
        const double hj = basis.value(j, q);
        s += basis.weights[q] * hj * hj * hre[2 * k - 2];
      }
      mu[k] = std::sqrt(2.0) * s;
    }
    rep.min_mu_diag = std::min(rep.min_mu_diag, std::abs(mu[j]));
    for (int q = 0; q < Q; ++q) {
      hermite_eval(2 * j - 1, std::sqrt(2.0) * basis.nodes[q], hre);
      double r = 0.0;
      for (int k = 1; k <= j; ++k) r += mu[k] * hre[2 * k - 2];
      const double hj = basis.value(j, q);
      rep.max_mu_residual = std::max(rep.max_mu_residual, std::abs(r - hj * hj));
    }
  }

  // sampled minimum divisor and excluded fraction over xi
  rep.min_divisor = std::numeric_limits<double>::infinity();
  rep.samples = samples;
  int excluded = 0;
  const int Jext = pmax;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> xi(n);
    for (int a = 0; a < n; ++a) xi[a] = 2.0 * counter_u01(seed, a + 1, s) - 1.0;
    const auto spec = perturbed_spectrum(family, nu, xi, basis);
    FrequencySet f;
    f.omega.assign(spec.lambda.begin(), spec.lambda.begin() + n);
    f.Omega.assign(spec.lambda.begin() + n, spec.lambda.begin() + n + Jext);
    f.gap_slope = 2.0;
    f.gap_offset = 2.0 * n - 1.0;
    f.drift_bound = 0.0;
    for (int j = 1; j <= Jext; ++j)
      f.drift_bound = std::max(f.drift_bound,
                               std::abs(f.Omega[j - 1] - (2.0 * (j + n) - 1.0)));
    const auto rep2 = certify(f, alpha, tau, K, Jext);
    rep.min_divisor = std::min(rep.min_divisor, rep2.min_abs_divisor);
    if (!rep2.passed) ++excluded;
  }
  rep.excluded_fraction = static_cast<double>(excluded) / samples;
  return rep;
}

namespace {

double multinomial(int total, std::span<const int> parts) {
  double v = std::tgamma(total + 1.0);
  for (int p : parts) v /= std::tgamma(p + 1.0);
  return v;
}

/// binom(gamma/2, t) for the (y+I)^{gamma/2} Taylor expansion.
double half_binom(double half_gamma, int t) {
  double v = 1.0;
  for (int i = 0; i < t; ++i) v *= (half_gamma - i) / (i + 1);
  return v;
}

/// All compositions of `total` into `n` non-negative parts.
void compositions(int total, int n, std::vector<int>& cur, int pos,
                  const std::function<void(const std::vector<int>&)>& fn) {
  if (pos == n - 1) {
    cur[pos] = total;
    fn(cur);
    return;
  }
  for (int v = 0; v <= total; ++v) {
    cur[pos] = v;
    compositions(total - v, n, cur, pos + 1, fn);
  }
}

/// Multisets of size `count` over modes 1..J (non-decreasing index lists).
void multisets(int count, int J, std::vector<int>& cur, int minmode,
               const std::function<void(const std::vector<int>&)>& fn) {
  if (static_cast<int>(cur.size()) == count) {
    fn(cur);
    return;
  }
  for (int j = minmode; j <= J; ++j) {
    cur.push_back(j);
    multisets(count, J, cur, j, fn);
    cur.pop_back();
  }
}

}  // namespace

TaylorHamiltonian build_P(const PotentialFamily& family, std::span<const double> I,
                          std::span<const double> xi, double nu, double eps, int m,
                          const SpectralBasis& basis, int D, int K) {
  const int n = family.n;
  if (static_cast<int>(I.size()) != n) throw std::invalid_argument("build_P: I size mismatch");
  if (m < 1 || D < 2) throw std::invalid_argument("build_P: m >= 1 and D >= 2 required");
  for (double Ij : I)
    if (!(Ij > 0.0)) throw std::invalid_argument("build_P: positive actions required");

  const PerturbedSpectrum spec = perturbed_spectrum(family, nu, xi, basis);
  const int Q = basis.quad_order;
  const int Jext = basis.modes - n;

  // eigenfunctions at the nodes
  RMat phi(basis.modes, Q);
  for (int j = 0; j < basis.modes; ++j)
    for (int q = 0; q < Q; ++q) {
      double s = 0.0;
      for (int c = 0; c < basis.modes; ++c) s += spec.phi(j, c) * basis.value(c + 1, q);
      phi(j, q) = s;
    }

  TaylorHamiltonian P(n, Jext, K, D);
  const int mp1 = m + 1;
  std::vector<double> slot_prod(Q);

  // z-derivative orders (a, b) with A-coefficients (m+1)!/(m+1-a)!
  for (int a = 0; a <= std::min(mp1, D); ++a) {
    for (int b = 0; b <= std::min(mp1, D - a); ++b) {
      double Aab = 1.0;
      for (int i = 0; i < a; ++i) Aab *= (mp1 - i);
      for (int i = 0; i < b; ++i) Aab *= (mp1 - i);
      const int alpha_total = mp1 - a, beta_total = mp1 - b;

      // u0-power expansion: exact harmonics over the internal modes
      struct PowTerm {
        std::vector<int> alpha, beta;  // per internal mode
        double weight;                 // multinomial product
      };
      std::vector<PowTerm> pow_terms;
      std::vector<int> ca(n), cb(n);
      compositions(alpha_total, n, ca, 0, [&](const std::vector<int>& av) {
        compositions(beta_total, n, cb, 0, [&](const std::vector<int>& bv) {
          PowTerm t;
          t.alpha = av;
          t.beta = bv;
          t.weight = multinomial(alpha_total, av) * multinomial(beta_total, bv);
          pow_terms.push_back(std::move(t));
        });
      });

      // z-slot multisets
      std::vector<int> qa, qb;
      multisets(a, Jext, qa, 1, [&](const std::vector<int>& qlist) {
        std::vector<int> qb2;
        multisets(b, Jext, qb2, 1, [&](const std::vector<int>& qblist) {
          // q! qbar! from repeated indices
          double qfact = 1.0;
          for (std::size_t i = 0; i < qlist.size();) {
            std::size_t j = i;
            while (j < qlist.size() && qlist[j] == qlist[i]) ++j;
            qfact *= std::tgamma(static_cast<double>(j - i) + 1.0);
            i = j;
          }
          for (std::size_t i = 0; i < qblist.size();) {
            std::size_t j = i;
            while (j < qblist.size() && qblist[j] == qblist[i]) ++j;
            qfact *= std::tgamma(static_cast<double>(j - i) + 1.0);
            i = j;
          }

          for (int q = 0; q < Q; ++q) {
            double p = basis.weights[q];
            for (int mode : qlist) p *= phi(n + mode - 1, q);
            for (int mode : qblist) p *= phi(n + mode - 1, q);
            slot_prod[q] = p;
          }

          for (const auto& pt : pow_terms) {
            // x-integral of the slot product against prod phi_j^{gamma_j}
            double integral = 0.0;
            for (int q = 0; q < Q; ++q) {
              double p = slot_prod[q];
              for (int j = 0; j < n; ++j) {
                const int gam = pt.alpha[j] + pt.beta[j];
                for (int rep = 0; rep < gam; ++rep) p *= phi(j, q);
              }
              integral += p;
            }
            if (integral == 0.0) continue;

            // Fourier index and the y expansion of prod c_j^{gamma_j}
            std::vector<int> kvec(n);
            int kinf = 0;
            for (int j = 0; j < n; ++j) {
              kvec[j] = pt.alpha[j] - pt.beta[j];
              kinf = std::max(kinf, std::abs(kvec[j]));
            }
            if (kinf > K) continue;

            const int max_my = (D - a - b) / 2;
            std::vector<int> my(n, 0);
            std::function<void(int, double)> expand_y = [&](int axis, double yfac) {
              if (axis == n) {
                Monomial key;
                key.angles = static_cast<std::int8_t>(n);
                for (int j = 0; j < n; ++j) {
                  key.k[j] = static_cast<std::int16_t>(kvec[j]);
                  key.m[j] = static_cast<std::uint8_t>(my[j]);
                }
                for (int mode : qlist) key.add_q(mode, 1);
                for (int mode : qblist) key.add_qbar(mode, 1);
                P.add_term(key, eps * Aab * pt.weight * yfac * integral / qfact);
                return;
              }
              const double half_gamma = 0.5 * (pt.alpha[axis] + pt.beta[axis]);
              for (int t = 0; t <= max_my; ++t) {
                int used = 0;
                for (int j = 0; j < axis; ++j) used += my[j];
                if (used + t > max_my) break;
                my[axis] = t;
                const double fac =
                    half_binom(half_gamma, t) * std::pow(I[axis], half_gamma - t);
                if (fac != 0.0) expand_y(axis + 1, yfac * fac);
              }
              my[axis] = 0;
            };
            expand_y(0, 1.0);
          }
        });
      });
    }
  }
  return P;
}

NlsRunReport nls_kam_run(const PotentialFamily& family, std::span<const double> I,
                         std::span<const double> xi, double nu, double eps, int m,
                         const SpectralBasis& basis, const NlsRunConfig& cfg) {
  const int n = family.n;
  const double tau = cfg.tau > 0 ? cfg.tau : n + 3.0;
  NlsRunReport rep;
  if (nu < cfg.C0 * eps)
    rep.warnings.push_back("nu < C0 eps: outside the stated perturbative regime");

  const PerturbedSpectrum spec = perturbed_spectrum(family, nu, xi, basis);
  const int Jext = basis.modes - n;
  FrequencySet N0;
  N0.omega.assign(spec.lambda.begin(), spec.lambda.begin() + n);
  N0.Omega.assign(spec.lambda.begin() + n, spec.lambda.end());
  N0.gap_slope = 2.0;
  N0.gap_offset = 2.0 * n - 1.0;
  for (int j = 1; j <= Jext; ++j)
    N0.drift_bound =
        std::max(N0.drift_bound, std::abs(N0.Omega[j - 1] - (2.0 * (j + n) - 1.0)));
  rep.omega0 = N0.omega;

  TaylorHamiltonian P =
      build_P(family, I, xi, nu, eps, m, basis, cfg.degree_cap, static_cast<int>(cfg.K0));

  const double t_exp = 2.0 * tau + n + 1.0;
  KamSchedule sched =
      make_schedule(cfg.s0, cfg.alpha0, 1.0, tau, t_exp, cfg.c0, cfg.c1, cfg.max_nu, cfg.K0);

  EngineConfig ecfg;
  ecfg.norms = NormParams(cfg.s0, cfg.r0, cfg.beta, cfg.psi_p);
  ecfg.target_majorant = 0.0;  // run the configured number of steps
  ecfg.compute_maps = false;
  KamEngine engine(N0, P, sched, ecfg);

  for (int nu_i = 0; nu_i <= cfg.max_nu && !engine.perturbation().empty(); ++nu_i)
    rep.trace.push_back(engine.step());
  rep.trace.push_back(engine.measure());
  rep.omega_star = engine.freqs().omega;
  for (int a = 0; a < n; ++a)
    rep.drift_omega = std::max(rep.drift_omega, std::abs(rep.omega_star[a] - rep.omega0[a]));
  rep.drift_over_nu = rep.drift_omega / nu;
  if (rep.trace.size() >= 2 && rep.trace[0].eps_deg2 > 0.0)
    rep.first_step_ratio = rep.trace[1].eps_deg2 / rep.trace[0].eps_deg2;
  return rep;
}

}  // namespace kamosc
