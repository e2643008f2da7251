#pragma once

#include <vector>

#include "kamosc/grid.hpp"
#include "kamosc/hamiltonian.hpp"

namespace kamosc {

/// Structure matrix of the symplectic form restricted to Z = (z, zbar):
/// J_c = [[0, +iI], [-iI, 0]], consistent with the flow zdot = +i dH/dzbar.
/// J_c^T = -J_c, J_c^2 = I, and exp(J_c A)^T J_c exp(J_c A) = J_c for A = A^T.
CMat jc_times(const CMat& X);  ///< J_c * X
CMat times_jc(const CMat& X);  ///< X * J_c
CMat jc_matrix(int zdim);

/// Grid-sampled quadratic generator
///   F = b0(theta) + b1(theta).y + a(theta).Z + 1/2 (A(theta) Z).Z.
struct QuadraticGenerator {
  int angles = 1;
  int modes = 0;  ///< J; Z dimension is 2J
  ThetaGrid grid;
  std::vector<cplx> b0;               ///< per grid point
  std::vector<std::vector<cplx>> b1;  ///< per grid point, n entries
  std::vector<std::vector<cplx>> a;   ///< per grid point, 2J entries
  std::vector<CMat> A;                ///< per grid point, symmetric 2J x 2J
  TaylorHamiltonian source;           ///< the decomposed Hamiltonian

  bool b1_zero(double tol = 0.0) const;
};

/// Samples the parts of a degree-<=2, y-linear F on a uniform grid with
/// per_axis >= 2 K_F + 1 ("grid too coarse" otherwise).
QuadraticGenerator decompose(const TaylorHamiltonian& F, const ThetaGrid& grid);

/// Time-one flow of a quadratic generator. theta map is the identity when
/// b1 = 0; the y image is y_linear y + 1/2 Z.M_a Z + y_lin_Z[a].Z + y_const[a].
struct SymplecticMap {
  int angles = 1;
  int modes = 0;
  ThetaGrid grid;
  bool theta_identity = true;
  std::vector<std::vector<double>> theta_image;  ///< ode mode only
  std::vector<CMat> L;                           ///< 2J x 2J per grid point
  std::vector<std::vector<cplx>> translation;    ///< 2J per grid point
  std::vector<std::vector<CMat>> M;              ///< n symmetric matrices per grid point
  std::vector<std::vector<cplx>> y_lin_Z;        ///< n x 2J per grid point (flattened)
  std::vector<std::vector<cplx>> y_const;        ///< n per grid point
  std::vector<RMat> y_linear;                    ///< n x n per grid point
  double symplecticity = 0.0;                    ///< max defect measured at build time

  static SymplecticMap identity(int angles, int modes, const ThetaGrid& grid);
};

enum class FlowMode { kExactQuadratic, kOde };

struct NumericalIntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact mode: L = exp(J_c A) by scaling-and-squaring, translation and y-shift
/// from the augmented generator series (requires b1 = 0). Ode mode: adaptive
/// Runge-Kutta integration of the theta flow, the fundamental matrix, and the
/// y quadratic forms to tolerance 1e-11. Symplecticity defect above 1e-8 is a
/// hard failure.
SymplecticMap time_one_map(const QuadraticGenerator& gen, FlowMode mode);

/// Max over grid points of max|L^T J_c L - J_c|.
double symplecticity_defect(const SymplecticMap& map);

struct ComposeResult {
  TaylorHamiltonian ham;
  double fourier_tail_mass = 0.0;  ///< |coefficients| dropped beyond the cutoff
};

/// H o Phi for theta-identity maps. Quadratic H composes by congruence
/// L^T Hess L plus the y-coefficient times the quadratic y-shift; higher
/// degrees expand monomially per grid point (guarded against blowup).
ComposeResult compose(const TaylorHamiltonian& H, const SymplecticMap& map, int cap,
                      int result_K = -1);

/// acc <- acc o next (theta-identity maps on the same grid): L = L_acc L_next,
/// M_a = M_next,a + L_next^T M_acc,a L_next.
void compose_quadratic_maps(SymplecticMap& acc, const SymplecticMap& next);

/// Fourier series of a per-grid-point matrix family; entries below
/// drop_tol * max norm are omitted.
std::vector<std::pair<std::vector<int>, CMat>> fourier_of_grid_mats(
    const ThetaGrid& grid, const std::vector<CMat>& mats, double drop_tol = 1e-250);

/// Synthesis of a matrix Fourier series on a (possibly different) grid.
std::vector<CMat> grid_mats_of_fourier(
    const std::vector<std::pair<std::vector<int>, CMat>>& series, const ThetaGrid& grid,
    int rows, int cols);

void dump_map_grid(const SymplecticMap& map, std::ostream& os);
void dump_map_fourier(const SymplecticMap& map, std::ostream& os);

}  // namespace kamosc
