#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kamosc/lie.hpp"

using namespace kamosc;

namespace {

Monomial key_of(int n, std::vector<int> k, std::vector<int> m,
                std::vector<std::pair<int, int>> q, std::vector<std::pair<int, int>> qb) {
  Monomial key;
  key.angles = static_cast<std::int8_t>(n);
  for (std::size_t a = 0; a < k.size(); ++a) key.k[a] = static_cast<std::int16_t>(k[a]);
  for (std::size_t a = 0; a < m.size(); ++a) key.m[a] = static_cast<std::uint8_t>(m[a]);
  for (auto [j, e] : q) key.add_q(j, e);
  for (auto [j, e] : qb) key.add_qbar(j, e);
  return key;
}

std::mt19937_64 rng(7);

TaylorHamiltonian random_quadratic(int n, int J, int K, int terms, bool with_y_and_linear,
                                   double amp = 0.3) {
  std::uniform_real_distribution<double> u(-amp, amp);
  std::uniform_int_distribution<int> uk(-K, K), uj(1, J), kind(0, with_y_and_linear ? 6 : 2);
  TaylorHamiltonian H(n, J, K, 2);
  for (int t = 0; t < terms; ++t) {
    Monomial key;
    key.angles = static_cast<std::int8_t>(n);
    for (int a = 0; a < n; ++a) key.k[a] = static_cast<std::int16_t>(uk(rng));
    switch (kind(rng)) {
      case 0: key.add_q(uj(rng), 1); key.add_qbar(uj(rng), 1); break;
      case 1: key.add_q(uj(rng), 1); key.add_q(uj(rng), 1); break;
      case 2: key.add_qbar(uj(rng), 1); key.add_qbar(uj(rng), 1); break;
      case 3: break;
      case 4: key.m[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1; break;
      case 5: key.add_q(uj(rng), 1); break;
      default: key.add_qbar(uj(rng), 1); break;
    }
    const cplx c(u(rng), u(rng));
    H.add_term(key, c);
    H.add_term(key.conjugate_partner(), std::conj(c));  // keep it real-valued
  }
  return H;
}

cplx eval_ham_at(const TaylorHamiltonian& H, std::span<const double> theta,
                 std::span<const cplx> y, std::span<const cplx> z, std::span<const cplx> zb) {
  std::vector<cplx> th(theta.size());
  for (std::size_t a = 0; a < theta.size(); ++a) th[a] = theta[a];
  return evaluate(H, th, y, z, zb);
}

/// Applies a theta-frozen map to a phase-space point.
void apply_map(const SymplecticMap& map, long g, std::span<const cplx> y_in,
               std::span<const cplx> Z_in, std::vector<cplx>& y_out, std::vector<cplx>& Z_out) {
  const int zdim = 2 * map.modes;
  Z_out.assign(zdim, 0.0);
  for (int i = 0; i < zdim; ++i) {
    cplx s = map.translation[g][i];
    for (int l = 0; l < zdim; ++l) s += map.L[g](i, l) * Z_in[l];
    Z_out[i] = s;
  }
  y_out.assign(map.angles, 0.0);
  for (int a = 0; a < map.angles; ++a) {
    cplx s = map.y_const[g][a];
    for (int i = 0; i < zdim; ++i) {
      s += map.y_lin_Z[g][static_cast<std::size_t>(a) * zdim + i] * Z_in[i];
      cplx row = 0.0;
      for (int l = 0; l < zdim; ++l) row += map.M[g][a](i, l) * Z_in[l];
      s += 0.5 * Z_in[i] * row;
    }
    for (int b = 0; b < map.angles; ++b) s += map.y_linear[g](a, b) * y_in[b];
    y_out[a] = s;
  }
}

}  // namespace

TEST_CASE("decompose splits the parts and reconstructs the source") {
  const auto F = random_quadratic(1, 4, 2, 14, true);
  const ThetaGrid grid = make_grid(1, 12);
  const auto gen = decompose(F, grid);
  // reconstruct F at each grid point from the parts and compare to evaluate()
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (long g = 0; g < grid.total; ++g) {
    const auto theta = grid.point(g);
    std::vector<cplx> y{cplx(u(rng), 0.0)};
    std::vector<cplx> z(4), zb(4);
    for (int j = 0; j < 4; ++j) {
      z[j] = cplx(u(rng), u(rng));
      zb[j] = cplx(u(rng), u(rng));
    }
    cplx parts = gen.b0[g] + gen.b1[g][0] * y[0];
    std::vector<cplx> Z(8);
    for (int j = 0; j < 4; ++j) {
      Z[j] = z[j];
      Z[4 + j] = zb[j];
    }
    for (int i = 0; i < 8; ++i) {
      parts += gen.a[g][i] * Z[i];
      for (int l = 0; l < 8; ++l) parts += 0.5 * gen.A[g](i, l) * Z[i] * Z[l];
    }
    const cplx direct = eval_ham_at(F, theta, y, z, zb);
    CHECK(std::abs(parts - direct) < 1e-13);
  }
}

TEST_CASE("decompose rejects coarse grids and high degree") {
  const auto F = random_quadratic(1, 3, 3, 8, false);
  CHECK_THROWS_AS(decompose(F, make_grid(1, 6)), std::invalid_argument);
  TaylorHamiltonian bad(1, 3, 1, 4);
  bad.add_term(key_of(1, {0}, {}, {{1, 2}, {2, 1}}, {{1, 1}}), 0.1);
  CHECK_THROWS_AS(decompose(bad, make_grid(1, 8)), std::invalid_argument);
}

TEST_CASE("diagonal generator rotates the pair by opposite phases") {
  // F = c z_1 zbar_1, c real: L = diag(e^{+ic}, e^{-ic}) in the (z, zbar) pair
  TaylorHamiltonian F(1, 1, 0, 2);
  const double c = 0.37;
  F.add_term(key_of(1, {0}, {}, {{1, 1}}, {{1, 1}}), c);
  const auto map = time_one_map(decompose(F, make_grid(1, 4)), FlowMode::kExactQuadratic);
  for (long g = 0; g < map.grid.total; ++g) {
    CHECK(std::abs(map.L[g](0, 0) - std::exp(cplx(0.0, c))) < 1e-14);
    CHECK(std::abs(map.L[g](1, 1) - std::exp(cplx(0.0, -c))) < 1e-14);
    CHECK(std::abs(map.L[g](0, 1)) < 1e-15);
    // modulus preservation on the z block
    CHECK(std::abs(std::abs(map.L[g](0, 0)) - 1.0) < 1e-14);
  }
}

TEST_CASE("zero generator gives the identity map") {
  TaylorHamiltonian F(1, 2, 0, 2);
  const auto map = time_one_map(decompose(F, make_grid(1, 4)), FlowMode::kExactQuadratic);
  for (long g = 0; g < map.grid.total; ++g) {
    CHECK(max_abs(map.L[g] - CMat::identity(4)) < 1e-14);
    for (const auto& t : map.translation[g]) CHECK(std::abs(t) == 0.0);
    CHECK(max_abs(map.M[g][0]) == 0.0);
  }
}

TEST_CASE("exp(Jc A) is symplectic for random symmetric A") {
  const int zdim = 8;
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  const CMat Jc = jc_matrix(zdim);
  for (int t = 0; t < 10; ++t) {
    CMat A(zdim, zdim);
    for (int i = 0; i < zdim; ++i)
      for (int j = i; j < zdim; ++j) {
        A(i, j) = cplx(u(rng), u(rng));
        A(j, i) = A(i, j);
      }
    const CMat L = expm(jc_times(A));
    const CMat D = matmul(transpose(L), jc_times(L)) - Jc;
    CHECK(max_abs(D) < 1e-12);
  }
}

TEST_CASE("symplecticity of produced maps, both modes") {
  const auto F = random_quadratic(1, 3, 2, 10, false);
  const auto exact = time_one_map(decompose(F, make_grid(1, 10)), FlowMode::kExactQuadratic);
  CHECK(exact.symplecticity < 1e-10);

  const auto Fy = random_quadratic(1, 3, 2, 10, true);
  const auto ode = time_one_map(decompose(Fy, make_grid(1, 10)), FlowMode::kOde);
  CHECK(ode.symplecticity < 1e-8);
}

TEST_CASE("exact and ode modes agree for theta-frozen generators") {
  const auto F = random_quadratic(1, 3, 2, 8, false);
  const ThetaGrid grid = make_grid(1, 8);
  const auto gen = decompose(F, grid);
  const auto a = time_one_map(gen, FlowMode::kExactQuadratic);
  const auto b = time_one_map(gen, FlowMode::kOde);
  for (long g = 0; g < grid.total; ++g) {
    CHECK(max_abs(a.L[g] - b.L[g]) < 1e-9);
    CHECK(max_abs(a.M[g][0] - b.M[g][0]) < 1e-9);
  }
}

TEST_CASE("group property for a theta-point-fixed autonomous generator") {
  const auto F = random_quadratic(1, 3, 0, 6, false);  // K = 0: theta-independent
  TaylorHamiltonian F2 = F;
  for (auto& [k, c] : F2.coeffs) c *= 2.0;
  const ThetaGrid grid = make_grid(1, 2);
  const auto once = time_one_map(decompose(F2, grid), FlowMode::kExactQuadratic);
  const auto half = time_one_map(decompose(F, grid), FlowMode::kExactQuadratic);
  for (long g = 0; g < grid.total; ++g) {
    const CMat twice = matmul(half.L[g], half.L[g]);
    CHECK(max_abs(once.L[g] - twice) < 1e-9);
  }
}

TEST_CASE("exact-quadratic mode rejects y-dependent generators") {
  TaylorHamiltonian F(1, 2, 1, 2);
  F.add_term(key_of(1, {1}, {1}, {}, {}), 0.1);
  CHECK_THROWS_AS(time_one_map(decompose(F, make_grid(1, 6)), FlowMode::kExactQuadratic),
                  std::invalid_argument);
}

TEST_CASE("compose: identity map returns the normal form unchanged") {
  std::vector<double> omega{1.3};
  std::vector<double> Omega{1.0, 3.0, 5.0};
  const auto N = make_normal_form(omega, Omega, 2);
  const auto id = SymplecticMap::identity(1, 3, make_grid(1, 8));
  const auto comp = compose(N, id, 2);
  CHECK(comp.fourier_tail_mass < 1e-14);
  for (const auto& [key, c] : N.coeffs)
    CHECK(std::abs(comp.ham.coeff(key) - c) < 1e-13);
  CHECK(comp.ham.size() == N.size());
}

TEST_CASE("compose: phase map leaves z_1 zbar_1 unchanged") {
  TaylorHamiltonian F(1, 2, 0, 2);
  F.add_term(key_of(1, {0}, {}, {{1, 1}}, {{1, 1}}), 0.8);
  const auto map = time_one_map(decompose(F, make_grid(1, 6)), FlowMode::kExactQuadratic);
  TaylorHamiltonian H(1, 2, 0, 2);
  H.add_term(key_of(1, {0}, {}, {{1, 1}}, {{1, 1}}), 1.0);
  const auto comp = compose(H, map, 2);
  CHECK(comp.ham.size() == 1);
  CHECK(std::abs(comp.ham.coeff(key_of(1, {0}, {}, {{1, 1}}, {{1, 1}})) - 1.0) < 1e-13);
}

TEST_CASE("composition respects the Poisson bracket at sample points") {
  // {A, B} o Phi = {A o Phi, B o Phi} for the canonical map Phi; the small
  // generator keeps the discarded Fourier tail far below the assertion level
  const int J = 3, K = 14;
  const auto F = random_quadratic(1, J, 2, 8, false, 0.04);
  const auto map = time_one_map(decompose(F, make_grid(1, 2 * (2 * K + 1))),
                                FlowMode::kExactQuadratic);
  const auto A = random_quadratic(1, J, 2, 8, true);
  const auto B = random_quadratic(1, J, 2, 8, true);
  const auto br = poisson_bracket(A, B, 2, K);
  const auto br_comp = compose(br.ham, map, 2, K);
  const auto Ac = compose(A, map, 2, K);
  const auto Bc = compose(B, map, 2, K);
  const auto comp_br = poisson_bracket(Ac.ham, Bc.ham, 2, K);

  std::uniform_real_distribution<double> u(-0.2, 0.2);
  double scale = 0.0;
  for (const auto& [k, c] : comp_br.ham.coeffs) scale = std::max(scale, std::abs(c));
  for (int t = 0; t < 20; ++t) {
    std::vector<cplx> th{cplx(u(rng) * 10.0, 0.0)}, y{cplx(u(rng), u(rng))};
    std::vector<cplx> z(J), zb(J);
    for (int j = 0; j < J; ++j) {
      z[j] = cplx(u(rng), u(rng));
      zb[j] = cplx(u(rng), u(rng));
    }
    const cplx lhs = evaluate(br_comp.ham, th, y, z, zb);
    const cplx rhs = evaluate(comp_br.ham, th, y, z, zb);
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, scale));
  }
}

TEST_CASE("compose matches pointwise evaluation through the map") {
  const int J = 3;
  const auto F = random_quadratic(1, J, 1, 6, false, 0.05);
  const ThetaGrid grid = make_grid(1, 34);
  const auto map = time_one_map(decompose(F, grid), FlowMode::kExactQuadratic);
  const auto H = random_quadratic(1, J, 1, 10, true);
  const auto comp = compose(H, map, 2, 16);

  std::uniform_real_distribution<double> u(-0.25, 0.25);
  for (long g = 0; g < grid.total; ++g) {
    const auto theta = grid.point(g);
    std::vector<cplx> y{cplx(u(rng), u(rng))};
    std::vector<cplx> Zin(2 * J);
    for (auto& v : Zin) v = cplx(u(rng), u(rng));
    std::vector<cplx> y_img, Z_img;
    apply_map(map, g, y, Zin, y_img, Z_img);
    std::vector<cplx> z_img(Z_img.begin(), Z_img.begin() + J),
        zb_img(Z_img.begin() + J, Z_img.end());
    const cplx direct = eval_ham_at(H, theta, y_img, z_img, zb_img);
    std::vector<cplx> zin(Zin.begin(), Zin.begin() + J), zbin(Zin.begin() + J, Zin.end());
    const cplx composed = eval_ham_at(comp.ham, theta, y, zin, zbin);
    CHECK(std::abs(direct - composed) < 1e-11);
  }
}

TEST_CASE("general-degree compose through the monomial path") {
  // quartic H = (z_1 zbar_1)^2 through a pure phase: invariant
  TaylorHamiltonian F(1, 2, 0, 2);
  F.add_term(key_of(1, {0}, {}, {{1, 1}}, {{1, 1}}), 0.5);
  const auto map = time_one_map(decompose(F, make_grid(1, 4)), FlowMode::kExactQuadratic);
  TaylorHamiltonian H(1, 2, 0, 4);
  H.add_term(key_of(1, {0}, {}, {{1, 2}}, {{1, 2}}), 1.0);
  const auto comp = compose(H, map, 4);
  CHECK(std::abs(comp.ham.coeff(key_of(1, {0}, {}, {{1, 2}}, {{1, 2}})) - 1.0) < 1e-12);
  CHECK(comp.ham.size() == 1);
}

TEST_CASE("quadratic subclass is closed under the reducibility-path flow") {
  // y-free quadratic H composed with a y-free quadratic flow stays quadratic
  // with no linear or constant part
  const auto F = random_quadratic(1, 3, 2, 8, false);
  const auto map = time_one_map(decompose(F, make_grid(1, 10)), FlowMode::kExactQuadratic);
  const auto H = random_quadratic(1, 3, 2, 8, false);
  const auto comp = compose(H, map, 2, 6);
  for (const auto& [key, c] : comp.ham.coeffs) {
    CHECK(key.order_y() == 0);
    CHECK(key.order_z() == 2);
  }
}
