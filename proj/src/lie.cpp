#include "kamosc/lie.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "kamosc/ode.hpp"

namespace kamosc {

CMat jc_matrix(int zdim) {
  const int J = zdim / 2;
  CMat Jc(zdim, zdim);
  for (int j = 0; j < J; ++j) {
    Jc(j, J + j) = cplx(0.0, 1.0);
    Jc(J + j, j) = cplx(0.0, -1.0);
  }
  return Jc;
}

CMat jc_times(const CMat& X) {
  const int J = X.rows / 2;
  CMat Y(X.rows, X.cols);
  for (int j = 0; j < J; ++j)
    for (int c = 0; c < X.cols; ++c) {
      Y(j, c) = cplx(0.0, 1.0) * X(J + j, c);
      Y(J + j, c) = cplx(0.0, -1.0) * X(j, c);
    }
  return Y;
}

CMat times_jc(const CMat& X) {
  const int J = X.cols / 2;
  CMat Y(X.rows, X.cols);
  for (int r = 0; r < X.rows; ++r)
    for (int j = 0; j < J; ++j) {
      Y(r, j) = cplx(0.0, -1.0) * X(r, J + j);
      Y(r, J + j) = cplx(0.0, 1.0) * X(r, j);
    }
  return Y;
}

bool QuadraticGenerator::b1_zero(double tol) const {
  for (const auto& v : b1)
    for (const cplx& c : v)
      if (std::abs(c) > tol) return false;
  return true;
}

QuadraticGenerator decompose(const TaylorHamiltonian& F, const ThetaGrid& grid) {
  if (grid.angles != F.angles) throw std::invalid_argument("decompose: angle dimension mismatch");
  int kmax = 0;
  for (const auto& [key, c] : F.coeffs) {
    if (key.weighted_degree() > 2) throw std::invalid_argument("decompose: degree > 2 input");
    kmax = std::max(kmax, key.k_inf());
  }
  if (grid.per_axis < 2 * kmax + 1) throw std::invalid_argument("decompose: grid too coarse");

  QuadraticGenerator gen;
  gen.angles = F.angles;
  gen.modes = F.modes;
  gen.grid = grid;
  gen.source = F;
  const int zdim = 2 * F.modes;
  gen.b0.assign(grid.total, 0.0);
  gen.b1.assign(grid.total, std::vector<cplx>(F.angles, 0.0));
  gen.a.assign(grid.total, std::vector<cplx>(zdim, 0.0));
  gen.A.assign(grid.total, CMat(zdim, zdim));

  // phase tables per distinct wave vector
  std::map<std::vector<int>, std::vector<cplx>> phases;
  for (const auto& [key, c] : F.coeffs) {
    std::vector<int> k(key.angles);
    for (int a = 0; a < key.angles; ++a) k[a] = key.k[a];
    if (phases.count(k)) continue;
    std::vector<cplx> tab(grid.total);
    for (long g = 0; g < grid.total; ++g) {
      const auto theta = grid.point(g);
      double phase = 0.0;
      for (int a = 0; a < key.angles; ++a) phase += k[a] * theta[a];
      tab[g] = std::exp(cplx(0.0, phase));
    }
    phases.emplace(std::move(k), std::move(tab));
  }

  for (const auto& [key, c] : F.coeffs) {
    std::vector<int> k(key.angles);
    for (int a = 0; a < key.angles; ++a) k[a] = key.k[a];
    const auto& tab = phases.at(k);
    const int oy = key.order_y(), oz = key.order_z();

    auto zidx = [&](int mode, bool bar) { return (bar ? F.modes : 0) + mode - 1; };

    if (oy == 0 && oz == 0) {
      for (long g = 0; g < grid.total; ++g) gen.b0[g] += c * tab[g];
    } else if (oy == 1) {
      int axis = -1;
      for (int a = 0; a < key.angles; ++a)
        if (key.m[a] == 1) axis = a;
      for (long g = 0; g < grid.total; ++g) gen.b1[g][axis] += c * tab[g];
    } else if (oz == 1) {
      const bool bar = key.nqb == 1;
      const int idx = bar ? zidx(key.qbj[0], true) : zidx(key.qj[0], false);
      for (long g = 0; g < grid.total; ++g) gen.a[g][idx] += c * tab[g];
    } else {  // oz == 2
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
      } else {  // one z, one zbar
        i1 = zidx(key.qj[0], false);
        i2 = zidx(key.qbj[0], true);
      }
      for (long g = 0; g < grid.total; ++g) {
        const cplx v = scale * tab[g];
        if (i1 == i2) {
          gen.A[g](i1, i1) += v;
        } else {
          gen.A[g](i1, i2) += v;
          gen.A[g](i2, i1) += v;
        }
      }
    }
  }
  return gen;
}

SymplecticMap SymplecticMap::identity(int angles, int modes, const ThetaGrid& grid) {
  SymplecticMap m;
  m.angles = angles;
  m.modes = modes;
  m.grid = grid;
  const int zdim = 2 * modes;
  m.L.assign(grid.total, CMat::identity(zdim));
  m.translation.assign(grid.total, std::vector<cplx>(zdim, 0.0));
  m.M.assign(grid.total, std::vector<CMat>(angles, CMat(zdim, zdim)));
  m.y_lin_Z.assign(grid.total, std::vector<cplx>(static_cast<std::size_t>(angles) * zdim, 0.0));
  m.y_const.assign(grid.total, std::vector<cplx>(angles, 0.0));
  m.y_linear.assign(grid.total, RMat::identity(angles));
  return m;
}

double symplecticity_defect(const SymplecticMap& map) {
  const CMat Jc = jc_matrix(2 * map.modes);
  double worst = 0.0;
  for (const CMat& L : map.L) {
    CMat D = matmul(transpose(L), jc_times(L)) - Jc;
    worst = std::max(worst, max_abs(D));
  }
  return worst;
}

namespace {

TaylorHamiltonian theta_derivative(const TaylorHamiltonian& F, int axis) {
  TaylorHamiltonian D(F.angles, F.modes, F.fourier_cutoff, F.degree_cap);
  for (const auto& [key, c] : F.coeffs)
    if (key.k[axis] != 0)
      D.add_term(key, c * cplx(0.0, static_cast<double>(key.k[axis])));
  return D;
}

/// -int_0^1 e^{t B}^T C e^{t B} dt via the series -sum_s T_s/(s+1)!,
/// T_0 = C, T_{s+1} = B^T T_s + T_s B.
CMat flow_weighted_integral(const CMat& B, const CMat& C) {
  const int d = B.rows;
  CMat Bt = transpose(B);
  CMat term = C;
  CMat acc(d, d);
  double fact = 1.0;
  for (int s = 0;; ++s) {
    fact *= (s + 1);
    add_scaled(acc, -1.0 / fact, term);
    const double tn = max_abs(term) / fact;
    if (tn < 1e-17 * (max_abs(acc) + 1e-300) || s > 60) break;
    term = matmul(Bt, term) + matmul(term, B);
  }
  return acc;
}

struct GenParts {
  cplx b0;
  std::vector<cplx> b1, a;
  CMat A;
};

/// Evaluate the parts of a degree-<=2 Hamiltonian at an arbitrary angle.
GenParts parts_at(const TaylorHamiltonian& F, std::span<const double> theta) {
  GenParts p;
  const int zdim = 2 * F.modes;
  p.b0 = 0.0;
  p.b1.assign(F.angles, 0.0);
  p.a.assign(zdim, 0.0);
  p.A = CMat(zdim, zdim);
  auto zidx = [&](int mode, bool bar) { return (bar ? F.modes : 0) + mode - 1; };
  for (const auto& [key, c] : F.coeffs) {
    double phase = 0.0;
    for (int a = 0; a < key.angles; ++a) phase += key.k[a] * theta[a];
    const cplx v = c * std::exp(cplx(0.0, phase));
    const int oy = key.order_y(), oz = key.order_z();
    if (oy == 0 && oz == 0) {
      p.b0 += v;
    } else if (oy == 1) {
      for (int a = 0; a < key.angles; ++a)
        if (key.m[a] == 1) p.b1[a] += v;
    } else if (oz == 1) {
      p.a[key.nqb ? zidx(key.qbj[0], true) : zidx(key.qj[0], false)] += v;
    } else {
      int i1, i2;
      cplx scale = v;
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
        p.A(i1, i1) += scale;
      } else {
        p.A(i1, i2) += scale;
        p.A(i2, i1) += scale;
      }
    }
  }
  return p;
}

SymplecticMap time_one_exact(const QuadraticGenerator& gen) {
  const int J = gen.modes, zdim = 2 * J, n = gen.angles;
  SymplecticMap map;
  map.angles = n;
  map.modes = J;
  map.grid = gen.grid;
  map.theta_identity = true;
  map.L.resize(gen.grid.total);
  map.translation.assign(gen.grid.total, std::vector<cplx>(zdim, 0.0));
  map.M.assign(gen.grid.total, std::vector<CMat>(n));
  map.y_lin_Z.assign(gen.grid.total,
                     std::vector<cplx>(static_cast<std::size_t>(n) * zdim, 0.0));
  map.y_const.assign(gen.grid.total, std::vector<cplx>(n, 0.0));
  map.y_linear.assign(gen.grid.total, RMat::identity(n));

  std::vector<QuadraticGenerator> dgen(n);
  for (int a = 0; a < n; ++a) dgen[a] = decompose(theta_derivative(gen.source, a), gen.grid);

  bool has_translation = false;
  for (const auto& v : gen.a)
    for (const cplx& c : v)
      if (c != cplx(0.0)) has_translation = true;

  for (long g = 0; g < gen.grid.total; ++g) {
    // augmented variable (Z, 1): d/dt (Z,1) = [[B, b],[0,0]] (Z,1)
    const CMat B = jc_times(gen.A[g]);
    if (has_translation) {
      CMat Baug(zdim + 1, zdim + 1);
      for (int i = 0; i < zdim; ++i)
        for (int j = 0; j < zdim; ++j) Baug(i, j) = B(i, j);
      // b = J_c a
      for (int j = 0; j < J; ++j) {
        Baug(j, zdim) = cplx(0.0, 1.0) * gen.a[g][J + j];
        Baug(J + j, zdim) = cplx(0.0, -1.0) * gen.a[g][j];
      }
      const CMat E = expm(Baug);
      map.L[g] = CMat(zdim, zdim);
      for (int i = 0; i < zdim; ++i) {
        for (int j = 0; j < zdim; ++j) map.L[g](i, j) = E(i, j);
        map.translation[g][i] = E(i, zdim);
      }
      for (int a = 0; a < n; ++a) {
        CMat Caug(zdim + 1, zdim + 1);
        for (int i = 0; i < zdim; ++i)
          for (int j = 0; j < zdim; ++j) Caug(i, j) = dgen[a].A[g](i, j);
        for (int i = 0; i < zdim; ++i) {
          Caug(i, zdim) = dgen[a].a[g][i];
          Caug(zdim, i) = dgen[a].a[g][i];
        }
        Caug(zdim, zdim) = 2.0 * dgen[a].b0[g];
        CMat Maug = flow_weighted_integral(Baug, Caug);
        CMat Ma(zdim, zdim);
        for (int i = 0; i < zdim; ++i)
          for (int j = 0; j < zdim; ++j) Ma(i, j) = Maug(i, j);
        map.M[g][a] = std::move(Ma);
        for (int i = 0; i < zdim; ++i)
          map.y_lin_Z[g][static_cast<std::size_t>(a) * zdim + i] = Maug(i, zdim);
        map.y_const[g][a] = 0.5 * Maug(zdim, zdim);
      }
    } else {
      map.L[g] = expm(B);
      for (int a = 0; a < n; ++a) map.M[g][a] = flow_weighted_integral(B, dgen[a].A[g]);
    }
  }
  return map;
}

SymplecticMap time_one_ode(const QuadraticGenerator& gen) {
  const int J = gen.modes, zdim = 2 * J, n = gen.angles;
  const int adim = zdim + 1;  // augmented (Z, 1)
  SymplecticMap map;
  map.angles = n;
  map.modes = J;
  map.grid = gen.grid;
  map.theta_identity = gen.b1_zero(0.0);
  map.theta_image.assign(gen.grid.total, std::vector<double>(n, 0.0));
  map.L.resize(gen.grid.total);
  map.translation.assign(gen.grid.total, std::vector<cplx>(zdim, 0.0));
  map.M.assign(gen.grid.total, std::vector<CMat>(n));
  map.y_lin_Z.assign(gen.grid.total,
                     std::vector<cplx>(static_cast<std::size_t>(n) * zdim, 0.0));
  map.y_const.assign(gen.grid.total, std::vector<cplx>(n, 0.0));
  map.y_linear.assign(gen.grid.total, RMat(n, n));

  const TaylorHamiltonian& F = gen.source;
  std::vector<TaylorHamiltonian> dF(n);
  for (int a = 0; a < n; ++a) dF[a] = theta_derivative(F, a);

  // state: theta (n) | Phi (adim^2) | G (n^2) | W_a (n * adim^2)
  const std::size_t off_phi = n;
  const std::size_t off_g = off_phi + static_cast<std::size_t>(adim) * adim;
  const std::size_t off_w = off_g + static_cast<std::size_t>(n) * n;
  const std::size_t dim = off_w + static_cast<std::size_t>(n) * adim * adim;

  for (long g = 0; g < gen.grid.total; ++g) {
    std::vector<cplx> state(dim, 0.0);
    const auto theta0 = gen.grid.point(g);
    for (int a = 0; a < n; ++a) state[a] = theta0[a];
    for (int i = 0; i < adim; ++i) state[off_phi + static_cast<std::size_t>(i) * adim + i] = 1.0;
    for (int a = 0; a < n; ++a) state[off_g + static_cast<std::size_t>(a) * n + a] = 1.0;

    auto rhs = [&](double, std::span<const cplx> y, std::span<cplx> dy) {
      std::fill(dy.begin(), dy.end(), cplx(0.0));
      std::vector<double> theta(n);
      for (int a = 0; a < n; ++a) theta[a] = y[a].real();
      const GenParts p = parts_at(F, theta);
      std::vector<GenParts> dp(n);
      for (int a = 0; a < n; ++a) dp[a] = parts_at(dF[a], theta);

      for (int a = 0; a < n; ++a) {
        if (std::abs(p.b1[a].imag()) > 1e-10)
          throw NumericalIntegrityError("ode flow: non-real angle velocity");
        dy[a] = p.b1[a].real();
      }

      CMat Baug(adim, adim);
      {
        const CMat B = jc_times(p.A);
        for (int i = 0; i < zdim; ++i)
          for (int j = 0; j < zdim; ++j) Baug(i, j) = B(i, j);
        for (int j = 0; j < J; ++j) {
          Baug(j, zdim) = cplx(0.0, 1.0) * p.a[J + j];
          Baug(J + j, zdim) = cplx(0.0, -1.0) * p.a[j];
        }
      }
      CMat Phi(adim, adim);
      std::copy(y.begin() + off_phi, y.begin() + off_phi + Phi.a.size(), Phi.a.begin());
      CMat dPhi = matmul(Baug, Phi);
      std::copy(dPhi.a.begin(), dPhi.a.end(), dy.begin() + off_phi);

      // g_{ab} = -d(b1_b)/d(theta_a)
      CMat gm(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) gm(a, b) = -dp[a].b1[b];
      CMat G(n, n);
      std::copy(y.begin() + off_g, y.begin() + off_g + G.a.size(), G.a.begin());
      CMat dG = matmul(gm, G);
      std::copy(dG.a.begin(), dG.a.end(), dy.begin() + off_g);

      CMat PhiT = transpose(Phi);
      for (int a = 0; a < n; ++a) {
        CMat Caug(adim, adim);
        for (int i = 0; i < zdim; ++i)
          for (int j = 0; j < zdim; ++j) Caug(i, j) = dp[a].A(i, j);
        for (int i = 0; i < zdim; ++i) {
          Caug(i, zdim) = dp[a].a[i];
          Caug(zdim, i) = dp[a].a[i];
        }
        Caug(zdim, zdim) = 2.0 * dp[a].b0;
        CMat dW = matmul(PhiT, matmul(Caug, Phi));
        for (cplx& v : dW.a) v = -v;
        for (int b = 0; b < n; ++b) {
          const cplx gab = gm(a, b);
          if (gab != cplx(0.0)) {
            const cplx* Wb = &y[off_w + static_cast<std::size_t>(b) * adim * adim];
            for (std::size_t t = 0; t < dW.a.size(); ++t) dW.a[t] += gab * Wb[t];
          }
        }
        std::copy(dW.a.begin(), dW.a.end(),
                  dy.begin() + off_w + static_cast<std::size_t>(a) * adim * adim);
      }
    };

    integrate_dopri5(rhs, state, 0.0, 1.0, 1e-11);

    for (int a = 0; a < n; ++a) map.theta_image[g][a] = state[a].real();
    CMat Phi(adim, adim);
    std::copy(state.begin() + off_phi, state.begin() + off_phi + Phi.a.size(), Phi.a.begin());
    map.L[g] = CMat(zdim, zdim);
    for (int i = 0; i < zdim; ++i) {
      for (int j = 0; j < zdim; ++j) map.L[g](i, j) = Phi(i, j);
      map.translation[g][i] = Phi(i, zdim);
    }
    for (int a = 0; a < n; ++a) {
      const cplx* Wa = &state[off_w + static_cast<std::size_t>(a) * adim * adim];
      CMat Ma(zdim, zdim);
      for (int i = 0; i < zdim; ++i)
        for (int j = 0; j < zdim; ++j) Ma(i, j) = Wa[static_cast<std::size_t>(i) * adim + j];
      map.M[g][a] = std::move(Ma);
      for (int i = 0; i < zdim; ++i)
        map.y_lin_Z[g][static_cast<std::size_t>(a) * zdim + i] =
            Wa[static_cast<std::size_t>(i) * adim + zdim];
      map.y_const[g][a] = 0.5 * Wa[static_cast<std::size_t>(zdim) * adim + zdim];
    }
    RMat G(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        G(a, b) = state[off_g + static_cast<std::size_t>(a) * n + b].real();
    map.y_linear[g] = std::move(G);
  }
  return map;
}

}  // namespace

SymplecticMap time_one_map(const QuadraticGenerator& gen, FlowMode mode) {
  SymplecticMap map;
  if (mode == FlowMode::kExactQuadratic) {
    if (!gen.b1_zero(0.0))
      throw std::invalid_argument("time_one_map: exact-quadratic mode requires b1 = 0");
    map = time_one_exact(gen);
  } else {
    map = time_one_ode(gen);
  }
  map.symplecticity = symplecticity_defect(map);
  if (map.symplecticity > 1e-8)
    throw NumericalIntegrityError("time_one_map: symplecticity defect " +
                                  std::to_string(map.symplecticity));
  return map;
}

namespace {

Monomial z_monomial(int angles, int modes, int i1, int i2) {
  Monomial key;
  key.angles = static_cast<std::int8_t>(angles);
  auto add = [&](int idx) {
    if (idx < modes)
      key.add_q(idx + 1, 1);
    else
      key.add_qbar(idx - modes + 1, 1);
  };
  if (i1 >= 0) add(i1);
  if (i2 >= 0) add(i2);
  return key;
}

void add_fourier_terms(TaylorHamiltonian& out, double& tail_mass, const ThetaGrid& grid,
                       std::span<const cplx> coeff_bins, const Monomial& base, int result_K) {
  // bins below the DFT roundoff of this sheet are numerical zeros
  double scale = 0.0;
  for (const cplx& c : coeff_bins) scale = std::max(scale, std::abs(c));
  const double drop = 1e-15 * scale;
  for (long bin = 0; bin < grid.total; ++bin) {
    const cplx c = coeff_bins[bin];
    if (std::abs(c) <= drop) continue;
    const auto k = grid.bin_wave(bin);
    int kinf = 0;
    for (int v : k) kinf = std::max(kinf, std::abs(v));
    if (kinf > result_K) {
      tail_mass += std::abs(c);
      continue;
    }
    Monomial key = base;
    for (int a = 0; a < key.angles; ++a) key.k[a] = static_cast<std::int16_t>(k[a]);
    out.add_term(key, c);
  }
}

ComposeResult compose_quadratic(const TaylorHamiltonian& H, const SymplecticMap& map,
                                int result_K) {
  const int J = map.modes, zdim = 2 * J, n = map.angles;
  const QuadraticGenerator parts = decompose(H, map.grid);
  const long G = map.grid.total;

  std::vector<cplx> new_c0(G);
  std::vector<std::vector<cplx>> new_hy(n, std::vector<cplx>(G));
  std::vector<std::vector<cplx>> new_a(zdim, std::vector<cplx>(G));
  // upper-triangle entries of the composed quadratic form, per grid point
  std::vector<std::vector<cplx>> new_A(static_cast<std::size_t>(zdim) * (zdim + 1) / 2,
                                       std::vector<cplx>(G));

  for (long g = 0; g < G; ++g) {
    const CMat& L = map.L[g];
    const CMat& AH = parts.A[g];
    const auto& T = map.translation[g];

    CMat Acomp = matmul(transpose(L), matmul(AH, L));
    for (int axis = 0; axis < n; ++axis) {
      const cplx hy = parts.b1[g][axis];
      if (hy != cplx(0.0)) add_scaled(Acomp, hy, map.M[g][axis]);
    }

    std::vector<cplx> AT = matvec(AH, T);
    std::vector<cplx> lin(zdim, 0.0);
    for (int i = 0; i < zdim; ++i) {
      cplx s = 0.0;
      for (int r = 0; r < zdim; ++r) s += L(r, i) * (AT[r] + parts.a[g][r]);
      lin[i] = s;
    }
    for (int axis = 0; axis < n; ++axis) {
      const cplx hy = parts.b1[g][axis];
      if (hy == cplx(0.0)) continue;
      for (int i = 0; i < zdim; ++i)
        lin[i] += hy * map.y_lin_Z[g][static_cast<std::size_t>(axis) * zdim + i];
    }

    cplx c0 = parts.b0[g];
    for (int r = 0; r < zdim; ++r) c0 += parts.a[g][r] * T[r] + 0.5 * T[r] * AT[r];
    for (int axis = 0; axis < n; ++axis) c0 += parts.b1[g][axis] * map.y_const[g][axis];

    new_c0[g] = c0;
    for (int axis = 0; axis < n; ++axis) new_hy[axis][g] = parts.b1[g][axis];
    for (int i = 0; i < zdim; ++i) new_a[i][g] = lin[i];
    std::size_t t = 0;
    for (int i = 0; i < zdim; ++i)
      for (int j = i; j < zdim; ++j) new_A[t++][g] = i == j ? 0.5 * Acomp(i, i) : Acomp(i, j);
  }

  ComposeResult out;
  out.ham = TaylorHamiltonian(H.angles, H.modes, result_K, std::max(2, H.degree_cap));

  auto emit = [&](std::span<const cplx> values, const Monomial& base) {
    const auto bins = dft_forward(map.grid, values);
    add_fourier_terms(out.ham, out.fourier_tail_mass, map.grid, bins, base, result_K);
  };

  emit(new_c0, z_monomial(H.angles, J, -1, -1));
  for (int axis = 0; axis < n; ++axis) {
    Monomial base;
    base.angles = static_cast<std::int8_t>(H.angles);
    base.m[axis] = 1;
    emit(new_hy[axis], base);
  }
  for (int i = 0; i < zdim; ++i) emit(new_a[i], z_monomial(H.angles, J, i, -1));
  std::size_t t = 0;
  for (int i = 0; i < zdim; ++i)
    for (int j = i; j < zdim; ++j) emit(new_A[t++], z_monomial(H.angles, J, i, j));
  return out;
}

using Poly = std::map<Monomial, cplx, MonomialLess>;

void poly_add(Poly& p, const Monomial& key, cplx v) {
  auto [it, fresh] = p.try_emplace(key, v);
  if (!fresh) it->second += v;
}

Poly poly_mul(const Poly& a, const Poly& b, int cap) {
  Poly r;
  for (const auto& [ka, ca] : a)
    for (const auto& [kb, cb] : b) {
      Monomial key = ka;
      for (int i = 0; i < kb.angles; ++i) {
        key.m[i] = static_cast<std::uint8_t>(key.m[i] + kb.m[i]);
      }
      for (int i = 0; i < kb.nq; ++i) key.add_q(kb.qj[i], kb.qe[i]);
      for (int i = 0; i < kb.nqb; ++i) key.add_qbar(kb.qbj[i], kb.qbe[i]);
      if (key.weighted_degree() > cap) continue;
      poly_add(r, key, ca * cb);
    }
  return r;
}

ComposeResult compose_general(const TaylorHamiltonian& H, const SymplecticMap& map, int cap,
                              int result_K) {
  const int J = map.modes, zdim = 2 * J, n = map.angles;
  const long G = map.grid.total;
  if (static_cast<long>(H.coeffs.size()) * G > (1L << 24))
    throw std::invalid_argument("compose: general path too large for this grid");

  // per-monomial grid arrays of the composed coefficients
  std::map<Monomial, std::vector<cplx>, MonomialLess> sheets;

  for (long g = 0; g < G; ++g) {
    const auto theta = map.grid.point(g);
    const CMat& L = map.L[g];
    const auto& T = map.translation[g];

    // affine images of the Z coordinates, and the quadratic y shifts
    std::vector<Poly> zimg(zdim);
    for (int i = 0; i < zdim; ++i) {
      Poly p;
      if (T[i] != cplx(0.0)) poly_add(p, z_monomial(H.angles, J, -1, -1), T[i]);
      for (int l = 0; l < zdim; ++l)
        if (L(i, l) != cplx(0.0)) poly_add(p, z_monomial(H.angles, J, l, -1), L(i, l));
      zimg[i] = std::move(p);
    }
    std::vector<Poly> yimg(n);
    for (int a = 0; a < n; ++a) {
      Poly p;
      Monomial ya;
      ya.angles = static_cast<std::int8_t>(H.angles);
      ya.m[a] = 1;
      poly_add(p, ya, 1.0);  // y_linear is the identity on theta-frozen maps
      if (map.y_const[g][a] != cplx(0.0))
        poly_add(p, z_monomial(H.angles, J, -1, -1), map.y_const[g][a]);
      for (int i = 0; i < zdim; ++i) {
        const cplx c = map.y_lin_Z[g][static_cast<std::size_t>(a) * zdim + i];
        if (c != cplx(0.0)) poly_add(p, z_monomial(H.angles, J, i, -1), c);
      }
      const CMat& Ma = map.M[g][a];
      for (int i = 0; i < zdim; ++i)
        for (int j = i; j < zdim; ++j) {
          const cplx c = i == j ? 0.5 * Ma(i, i) : Ma(i, j);
          if (c != cplx(0.0)) poly_add(p, z_monomial(H.angles, J, i, j), c);
        }
      yimg[a] = std::move(p);
    }

    for (const auto& [key, c] : H.coeffs) {
      double phase = 0.0;
      for (int a = 0; a < key.angles; ++a) phase += key.k[a] * theta[a];
      Poly acc;
      poly_add(acc, z_monomial(H.angles, J, -1, -1), c * std::exp(cplx(0.0, phase)));
      for (int a = 0; a < key.angles; ++a)
        for (int rep = 0; rep < key.m[a]; ++rep) acc = poly_mul(acc, yimg[a], cap);
      for (int i = 0; i < key.nq; ++i)
        for (int rep = 0; rep < key.qe[i]; ++rep)
          acc = poly_mul(acc, zimg[key.qj[i] - 1], cap);
      for (int i = 0; i < key.nqb; ++i)
        for (int rep = 0; rep < key.qbe[i]; ++rep)
          acc = poly_mul(acc, zimg[J + key.qbj[i] - 1], cap);
      for (const auto& [mono, v] : acc) {
        auto [it, fresh] = sheets.try_emplace(mono, std::vector<cplx>());
        if (fresh) it->second.assign(G, 0.0);
        it->second[g] += v;
      }
    }
  }

  ComposeResult out;
  out.ham = TaylorHamiltonian(H.angles, H.modes, result_K, cap);
  for (const auto& [mono, values] : sheets) {
    const auto bins = dft_forward(map.grid, values);
    add_fourier_terms(out.ham, out.fourier_tail_mass, map.grid, bins, mono, result_K);
  }
  return out;
}

}  // namespace

ComposeResult compose(const TaylorHamiltonian& H, const SymplecticMap& map, int cap,
                      int result_K) {
  if (H.angles != map.angles || H.modes != map.modes)
    throw std::invalid_argument("compose: dimension mismatch");
  if (!map.theta_identity)
    throw std::invalid_argument("compose: only theta-frozen maps are supported");
  if (result_K < 0) result_K = H.fourier_cutoff;
  int hdeg = 0;
  for (const auto& [key, c] : H.coeffs) hdeg = std::max(hdeg, key.weighted_degree());
  if (hdeg <= 2 && cap >= 2) return compose_quadratic(H, map, result_K);
  return compose_general(H, map, cap, result_K);
}

void compose_quadratic_maps(SymplecticMap& acc, const SymplecticMap& next) {
  if (acc.grid.total != next.grid.total || acc.modes != next.modes)
    throw std::invalid_argument("compose_quadratic_maps: grid mismatch");
  for (long g = 0; g < acc.grid.total; ++g) {
    const CMat Lt = transpose(next.L[g]);
    for (int a = 0; a < acc.angles; ++a)
      acc.M[g][a] = next.M[g][a] + matmul(Lt, matmul(acc.M[g][a], next.L[g]));
    acc.L[g] = matmul(acc.L[g], next.L[g]);
  }
  acc.symplecticity = symplecticity_defect(acc);
}

std::vector<std::pair<std::vector<int>, CMat>> fourier_of_grid_mats(
    const ThetaGrid& grid, const std::vector<CMat>& mats, double drop_tol) {
  const int rows = mats.empty() ? 0 : mats[0].rows;
  const int cols = mats.empty() ? 0 : mats[0].cols;
  std::vector<std::vector<cplx>> bins(grid.total);
  std::vector<cplx> entry(grid.total);
  std::vector<CMat> coef(grid.total, CMat(rows, cols));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      for (long g = 0; g < grid.total; ++g) entry[g] = mats[g](i, j);
      const auto c = dft_forward(grid, entry);
      for (long b = 0; b < grid.total; ++b) coef[b](i, j) = c[b];
    }
  double scale = 0.0;
  for (const CMat& m : coef) scale = std::max(scale, max_abs(m));
  std::vector<std::pair<std::vector<int>, CMat>> out;
  for (long b = 0; b < grid.total; ++b)
    if (max_abs(coef[b]) > drop_tol * scale) out.emplace_back(grid.bin_wave(b), coef[b]);
  return out;
}

std::vector<CMat> grid_mats_of_fourier(
    const std::vector<std::pair<std::vector<int>, CMat>>& series, const ThetaGrid& grid,
    int rows, int cols) {
  std::vector<CMat> out(grid.total, CMat(rows, cols));
  for (long g = 0; g < grid.total; ++g) {
    const auto theta = grid.point(g);
    for (const auto& [k, mat] : series) {
      double phase = 0.0;
      for (std::size_t a = 0; a < k.size(); ++a) phase += k[a] * theta[a];
      add_scaled(out[g], std::exp(cplx(0.0, phase)), mat);
    }
  }
  return out;
}

void dump_map_grid(const SymplecticMap& map, std::ostream& os) {
  char buf[80];
  os << "symplecticmap n=" << map.angles << " J=" << map.modes << " grid=" << map.grid.per_axis
     << " points=" << map.grid.total << "\n";
  for (long g = 0; g < map.grid.total; ++g) {
    os << "point " << g << " L\n";
    const CMat& L = map.L[g];
    for (int i = 0; i < L.rows; ++i) {
      for (int j = 0; j < L.cols; ++j) {
        std::snprintf(buf, sizeof buf, "%s%.17g %.17g", j ? " " : "", L(i, j).real(),
                      L(i, j).imag());
        os << buf;
      }
      os << "\n";
    }
    for (int a = 0; a < map.angles; ++a) {
      os << "point " << g << " M" << a << "\n";
      const CMat& M = map.M[g][a];
      for (int i = 0; i < M.rows; ++i) {
        for (int j = 0; j < M.cols; ++j) {
          std::snprintf(buf, sizeof buf, "%s%.17g %.17g", j ? " " : "", M(i, j).real(),
                        M(i, j).imag());
          os << buf;
        }
        os << "\n";
      }
    }
  }
}

void dump_map_fourier(const SymplecticMap& map, std::ostream& os) {
  char buf[80];
  const auto series = fourier_of_grid_mats(map.grid, map.L, 1e-18);
  os << "symplecticmap-fourier n=" << map.angles << " J=" << map.modes
     << " modes=" << series.size() << "\n";
  for (const auto& [k, mat] : series) {
    os << "k";
    for (int v : k) os << " " << v;
    os << "\n";
    for (int i = 0; i < mat.rows; ++i) {
      for (int j = 0; j < mat.cols; ++j) {
        std::snprintf(buf, sizeof buf, "%s%.17g %.17g", j ? " " : "", mat(i, j).real(),
                      mat(i, j).imag());
        os << buf;
      }
      os << "\n";
    }
  }
}

}  // namespace kamosc
