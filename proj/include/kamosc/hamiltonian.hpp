#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kamosc/linalg.hpp"

namespace kamosc {

constexpr int kMaxAngles = 4;  ///< supported angle dimension n
constexpr int kMaxSlots = 8;   ///< supported total z/zbar exponent per monomial

/// One monomial e^{i k.theta} y^m z^q zbar^qbar. Slot lists are sorted by mode
/// index with zero exponents removed; that canonical form is the map key.
struct Monomial {
  std::int8_t angles = 0;
  std::array<std::int16_t, kMaxAngles> k{};
  std::array<std::uint8_t, kMaxAngles> m{};
  std::uint8_t nq = 0, nqb = 0;
  std::array<std::uint16_t, kMaxSlots> qj{};
  std::array<std::uint8_t, kMaxSlots> qe{};
  std::array<std::uint16_t, kMaxSlots> qbj{};
  std::array<std::uint8_t, kMaxSlots> qbe{};

  int weighted_degree() const;  ///< 2|m| + |q + qbar|
  int order_y() const;          ///< |m|
  int order_z() const;          ///< |q| + |qbar|
  int k_inf() const;
  int k_l1() const;
  int q_exponent(int mode) const;
  int qbar_exponent(int mode) const;
  int max_mode() const;
  bool is_zero_key() const;  ///< k = 0, m = 0, q = qbar = 0

  void add_q(int mode, int expo);
  void add_qbar(int mode, int expo);

  Monomial conjugate_partner() const;  ///< (-k, m, qbar, q)

  bool operator==(const Monomial&) const = default;
};

struct MonomialLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// Sparse Fourier-Taylor polynomial on T^n x R^n x l2 x l2, stored for
/// |k|_inf <= fourier_cutoff and weighted degree <= degree_cap.
struct TaylorHamiltonian {
  int angles = 1;          ///< n
  int modes = 0;           ///< J
  int fourier_cutoff = 0;  ///< K
  int degree_cap = 2;      ///< D
  std::map<Monomial, cplx, MonomialLess> coeffs;

  TaylorHamiltonian() = default;
  TaylorHamiltonian(int n, int J, int K, int D);

  /// Merge-add a term; throws if the key violates the stored bounds or the
  /// coefficient is non-finite. Exact zero results are erased.
  void add_term(const Monomial& key, cplx value);
  std::size_t size() const { return coeffs.size(); }
  bool empty() const { return coeffs.empty(); }
  cplx coeff(const Monomial& key) const;
};

/// Weights defining the computable majorant of the analytic norms: the
/// substitution |e^{ik.theta}| <= e^{|k| s}, |y_j| <= r^2, |z_j| <= r/Psi(j)
/// with Psi(j) = j^{psi_p/2}.
struct NormParams {
  double s = 0.5;
  double r = 1.0;
  double beta = 0.25;
  double psi_p = 2.0;      ///< Psi(j) = j^{psi_p/2}; psi_p >= 2 so Psi(j) >= j
  double domain_r = -1.0;  ///< substitution radius; < 0 means equal to r

  NormParams() = default;
  NormParams(double s_, double r_, double beta_, double psi_p_ = 2.0, double domain_r_ = -1.0);
  double psi(int j) const;
  double rd() const { return domain_r < 0.0 ? r : domain_r; }
};

struct NormReport {
  double sup_part = 0.0;
  double y_deriv_part = 0.0;
  double z_deriv_part = 0.0;
  double zz_deriv_part = 0.0;
  double total = 0.0;
};

struct BracketResult {
  TaylorHamiltonian ham;
  TaylorHamiltonian tail;  ///< degree- or cutoff-violating terms (relaxed bounds)
  double tail_abs_mass = 0.0;
};

/// {A,B} = sum_a (dA/dtheta_a dB/dy_a - dA/dy_a dB/dtheta_a)
///       + i sum_j (dA/dz_j dB/dzbar_j - dA/dzbar_j dB/dz_j),
/// Fourier indices convolve; the result keeps |k|_inf <= result_K (default:
/// max of the operands' cutoffs) and weighted degree <= cap, the rest goes to
/// the tail.
BracketResult poisson_bracket(const TaylorHamiltonian& A, const TaylorHamiltonian& B, int cap,
                              int result_K = -1);

NormReport majorant_norm(const TaylorHamiltonian& H, const NormParams& p);

/// Majorant of the vector-field seminorm |X_H|_r = |X| + |Y|/r^2 + (|U|+|V|)_Psi/r.
double vector_field_majorant(const TaylorHamiltonian& H, const NormParams& p);

/// Diagnostic: max over (j,l) of (jl)^beta (1+|j-l|) x second-derivative bound.
double second_derivative_plus_weight(const TaylorHamiltonian& H, const NormParams& p);

std::pair<TaylorHamiltonian, TaylorHamiltonian> taylor_truncate(const TaylorHamiltonian& P);

/// Keeps exactly the k = 0 terms with |m| + |q| = 1 and q = qbar.
TaylorHamiltonian mean_value(const TaylorHamiltonian& R);

/// Reality test: coeff(-k, m, qbar, q) == conj(coeff(k, m, q, qbar)) within tol
/// relative to the largest coefficient.
bool is_real_symmetric(const TaylorHamiltonian& H, double tol = 1e-12);

/// Normal form omega . y + sum Omega_j z_j zbar_j.
TaylorHamiltonian make_normal_form(std::span<const double> omega, std::span<const double> Omega,
                                   int K, int D = 2);

cplx evaluate(const TaylorHamiltonian& H, std::span<const cplx> theta, std::span<const cplx> y,
              std::span<const cplx> z, std::span<const cplx> zbar);

/// Textual dump, one record per key:
///   k1 .. kn | m1 .. mn | (j:qj)* | (j:qbj)* | re im
/// Bit-exact round-trip.
void dump(const TaylorHamiltonian& H, std::ostream& os);
TaylorHamiltonian parse(std::istream& is);

}  // namespace kamosc
