#include "kamosc/variational.hpp"

#include <cmath>

#include "kamosc/divisors.hpp"
#include "kamosc/ode.hpp"

namespace kamosc {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double nrm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// |phi|^{p-1} phi evaluated at the nodes, back to coefficients.
std::vector<double> nonlinear_term(std::span<const double> c, double p,
                                   const SpectralBasis& basis) {
  const auto u = synthesize_real(basis, c);
  std::vector<double> f(u.size());
  for (std::size_t q = 0; q < u.size(); ++q)
    f[q] = std::pow(std::abs(u[q]), p - 1.0) * u[q];
  return analyze_real(basis, f);
}

double nonlinear_energy(std::span<const double> c, double p, const SpectralBasis& basis) {
  const auto u = synthesize_real(basis, c);
  double s = 0.0;
  for (std::size_t q = 0; q < u.size(); ++q)
    s += basis.weights[q] * std::pow(std::abs(u[q]), p + 1.0);
  return s;
}

}  // namespace

double energy_functional(std::span<const double> coeffs, double p, const SpectralBasis& basis,
                         bool focusing, double eps_focus) {
  double quad = 0.0;
  for (std::size_t j = 0; j < coeffs.size(); ++j)
    quad += 0.5 * (2.0 * j + 1.0) * coeffs[j] * coeffs[j];
  const double nl = nonlinear_energy(coeffs, p, basis) / (p + 1.0);
  return focusing ? quad - eps_focus * nl : quad + nl;
}

double residual(std::span<const double> coeffs, double lambda, double p,
                const SpectralBasis& basis) {
  const auto nl = nonlinear_term(coeffs, p, basis);
  double s = 0.0;
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const double r = (2.0 * j + 1.0 - lambda) * coeffs[j] + nl[j];
    s += r * r;
  }
  return std::sqrt(s);
}

std::vector<Minimizer> minimize(const VariationalProblem& prob, const SpectralBasis& basis,
                                std::uint64_t seed) {
  if (!(prob.mu > 0.0) || prob.p < 1.0)
    throw std::invalid_argument("minimize: mu > 0 and p >= 1 required");
  if (prob.modes != basis.modes)
    throw std::invalid_argument("minimize: basis must match the truncation level");
  if (prob.focusing && prob.p >= 5.0)
    throw std::invalid_argument("minimize: focusing variant requires p < 5");
  const int J = prob.modes;
  const double sgn = prob.focusing ? -prob.eps_focus : 1.0;

  std::vector<Minimizer> out;
  std::vector<std::vector<double>> prev;

  auto project_orth = [&](std::vector<double>& c) {
    for (const auto& ph : prev) {
      const double d = dot(c, ph) / (prob.mu * prob.mu);
      for (int j = 0; j < J; ++j) c[j] -= d * ph[j];
    }
  };

  auto grad = [&](const std::vector<double>& c) {
    auto nl = nonlinear_term(std::span<const double>(c).first(J), prob.p, basis);
    std::vector<double> g(J);
    for (int j = 0; j < J; ++j) g[j] = (2.0 * j + 1.0) * c[j] + sgn * nl[j];
    return g;
  };

  auto energy = [&](const std::vector<double>& c) {
    return energy_functional(std::span<const double>(c).first(J), prob.p, basis, prob.focusing,
                             prob.eps_focus);
  };

  for (int k = 0; k < prob.count; ++k) {
    Minimizer best;
    best.energy = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < prob.restarts; ++restart) {
      std::vector<double> c(J);
      for (int j = 0; j < J; ++j)
        c[j] = (counter_u01(seed, k * 97 + restart, j) - 0.5) / (1.0 + j);
      project_orth(c);
      double scale = nrm(c);
      if (scale == 0.0) continue;
      for (double& v : c) v *= prob.mu / scale;

      double E = energy(c);
      const double quad0 = E;
      std::vector<double> g = grad(c), gt(J), c_prev, gt_prev;
      double step = 0.1;
      int it = 0;
      double gn = 0.0;
      for (; it < prob.max_iter; ++it) {
        // tangent gradient: remove the sphere and orthogonality components
        gt = g;
        project_orth(gt);
        const double radial = dot(gt, c) / (prob.mu * prob.mu);
        for (int j = 0; j < J; ++j) gt[j] -= radial * c[j];
        gn = nrm(gt);
        if (gn < std::max(prob.tol * 1e-7, 5e-14)) break;

        if (!c_prev.empty()) {
          // Barzilai-Borwein step from the last tangent pair
          double num = 0.0, den = 0.0;
          for (int j = 0; j < J; ++j) {
            const double dc = c[j] - c_prev[j], dg = gt[j] - gt_prev[j];
            num += dc * dc;
            den += dc * dg;
          }
          if (den > 0.0) step = std::clamp(num / den, 1e-6, 10.0);
        }
        c_prev = c;
        gt_prev = gt;

        // backtracking retraction keeping the energy monotone; near the
        // floor the Armijo decrease drowns in roundoff, so plain descent
        // is accepted there
        double E_new = E;
        const double armijo = gn > 1e-9 ? 1e-4 * step * gn * gn : 0.0;
        std::vector<double> cand(J);
        for (int bt = 0; bt < 60; ++bt) {
          for (int j = 0; j < J; ++j) cand[j] = c[j] - step * gt[j];
          project_orth(cand);
          const double s = nrm(cand);
          if (s > 0.0) {
            for (double& v : cand) v *= prob.mu / s;
            E_new = energy(cand);
            if (E_new <= E - armijo) break;
          }
          step *= 0.5;
        }
        if (E_new > E) break;  // no descent direction left at this scale
        c = cand;
        E = E_new;
        g = grad(c);
        if (prob.focusing && E < -10.0 * std::abs(quad0)) {
          double quad = 0.0;
          for (int j = 0; j < J; ++j) quad += 0.5 * (2.0 * j + 1.0) * c[j] * c[j];
          if (quad < 0.5 * quad0)
            throw std::runtime_error("minimize: focusing runaway detected");
        }
      }
      if (E < best.energy) {
        best.coeffs = c;
        best.energy = E;
        best.grad_norm = gn;
        best.iterations = it;
      }
    }
    if (best.coeffs.empty())
      throw std::runtime_error("minimize: no converged restart for minimizer " +
                               std::to_string(k + 1));
    // multiplier from pairing the stationarity equation with phi
    double tphi = 0.0;
    for (int j = 0; j < J; ++j)
      tphi += (2.0 * j + 1.0) * best.coeffs[j] * best.coeffs[j];
    best.lambda =
        (tphi + sgn * nonlinear_energy(best.coeffs, prob.p, basis)) / (prob.mu * prob.mu);

    // Newton polish on the KKT system: the projected gradient stalls at the
    // energy roundoff floor (~1e-11), the bordered solve converges the
    // stationarity equations to machine precision
    {
      const int nc = static_cast<int>(prev.size());
      std::vector<double> mults(nc, 0.0);
      for (int it = 0; it < 8; ++it) {
        const auto nl = nonlinear_term(std::span<const double>(best.coeffs).first(J), prob.p,
                                       basis);
        std::vector<double> r(J + 1 + nc, 0.0);
        for (int j = 0; j < J; ++j) {
          r[j] = (2.0 * j + 1.0 - best.lambda) * best.coeffs[j] + sgn * nl[j];
          for (int i = 0; i < nc; ++i) r[j] -= mults[i] * prev[i][j];
        }
        double n2 = 0.0;
        for (int j = 0; j < J; ++j) n2 += best.coeffs[j] * best.coeffs[j];
        r[J] = 0.5 * (n2 - prob.mu * prob.mu);
        for (int i = 0; i < nc; ++i) r[J + 1 + i] = dot(best.coeffs, prev[i]);
        double rn = 0.0;
        for (double v : r) rn = std::max(rn, std::abs(v));
        best.grad_norm = rn;
        if (rn < 1e-14 * std::max(1.0, best.lambda)) break;

        const auto u = synthesize_real(basis, std::span<const double>(best.coeffs).first(J));
        std::vector<double> v(u.size());
        for (std::size_t q = 0; q < u.size(); ++q)
          v[q] = prob.p * std::pow(std::abs(u[q]), prob.p - 1.0);
        const RMat nlj = assemble_bilinear(basis, v);
        CMat Jac(J + 1 + nc, J + 1 + nc);
        for (int j = 0; j < J; ++j) {
          for (int l = 0; l < J; ++l) Jac(j, l) = sgn * nlj(j, l);
          Jac(j, j) += 2.0 * j + 1.0 - best.lambda;
          Jac(j, J) = -best.coeffs[j];
          for (int i = 0; i < nc; ++i) Jac(j, J + 1 + i) = -prev[i][j];
        }
        for (int j = 0; j < J; ++j) {
          Jac(J, j) = best.coeffs[j];
          for (int i = 0; i < nc; ++i) Jac(J + 1 + i, j) = prev[i][j];
        }
        CMat rhs(J + 1 + nc, 1);
        for (int j = 0; j < J + 1 + nc; ++j) rhs(j, 0) = -r[j];
        const CMat delta = solve(Jac, rhs);
        for (int j = 0; j < J; ++j) best.coeffs[j] += delta(j, 0).real();
        best.lambda += delta(J, 0).real();
        for (int i = 0; i < nc; ++i) mults[i] += delta(J + 1 + i, 0).real();
      }
    }

    for (const auto& ph : prev)
      if (std::abs(dot(best.coeffs, ph)) > 1e-8 * prob.mu * prob.mu)
        throw std::runtime_error("minimize: loss of orthogonality");
    prev.push_back(best.coeffs);
    out.push_back(std::move(best));
  }
  return out;
}

double verify_periodic_orbit(std::span<const double> coeffs, double lambda, double p, double T,
                             double tol, const SpectralBasis& basis) {
  const int J = static_cast<int>(coeffs.size());
  if (J != basis.modes) throw std::invalid_argument("verify_periodic_orbit: basis mismatch");

  // interaction picture w_j = e^{i(2j-1)t} u_j takes the stiff oscillator
  // phases out of the integration; only the nonlinearity is stepped
  std::vector<cplx> state(coeffs.begin(), coeffs.end());
  std::vector<cplx> u(J);
  auto rhs = [&](double t, std::span<const cplx> w, std::span<cplx> dw) {
    for (int j = 0; j < J; ++j)
      u[j] = std::exp(cplx(0.0, -(2.0 * j + 1.0) * t)) * w[j];
    auto samples = synthesize(basis, u);
    for (auto& s : samples) s *= std::pow(std::abs(s), p - 1.0);
    auto nl = analyze(basis, samples);
    for (int j = 0; j < J; ++j)
      dw[j] = cplx(0.0, -1.0) * std::exp(cplx(0.0, (2.0 * j + 1.0) * t)) * nl[j];
  };

  double worst = 0.0;
  auto observer = [&](double t, std::span<const cplx> w) {
    double dev = 0.0;
    for (int j = 0; j < J; ++j) {
      const cplx uj = std::exp(cplx(0.0, -(2.0 * j + 1.0) * t)) * w[j];
      dev += std::norm(uj - std::exp(cplx(0.0, -lambda * t)) * coeffs[j]);
    }
    worst = std::max(worst, std::sqrt(dev));
  };
  integrate_dopri5(rhs, state, 0.0, T, std::min(tol, 1e-13), observer);
  return worst;
}

}  // namespace kamosc
