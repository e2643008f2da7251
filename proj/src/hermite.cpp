#include "kamosc/hermite.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "kamosc/kernels.hpp"

namespace kamosc {

namespace {
constexpr double kQuarticRootPi = 0.7511255444649425;  // pi^{-1/4}
// Rescale window for the polynomial-part recurrence.
constexpr double kBig = 0x1p+512, kBigInv = 0x1p-512;
}  // namespace

void hermite_eval(int jmax, double x, std::span<double> out) {
  if (jmax < 1) throw std::invalid_argument("hermite_eval: jmax >= 1 required");
  if (static_cast<int>(out.size()) < jmax)
    throw std::invalid_argument("hermite_eval: output span too small");
  // p_j = h_j(x) e^{x^2/2} scaled by 2^{-512*shifts}; h_j recombined in the
  // exponent so neither factor alone can overflow.
  const double half_x2 = 0.5 * x * x;
  double pm1 = 0.0, p = kQuarticRootPi;
  long shifts = 0;
  for (int j = 1; j <= jmax; ++j) {
    const double log_scale = shifts * (512.0 * M_LN2) - half_x2;
    if (log_scale > 700.0)
      throw std::overflow_error("hermite_eval: recurrence overflow at mode " +
                                std::to_string(j));
    out[j - 1] = (log_scale < -745.0 || p == 0.0) ? 0.0 : p * std::exp(log_scale);
    if (j == jmax) break;
    const double pnext = x * std::sqrt(2.0 / j) * p - std::sqrt((j - 1.0) / j) * pm1;
    pm1 = p;
    p = pnext;
    if (std::abs(p) > kBig) {
      p *= kBigInv;
      pm1 *= kBigInv;
      ++shifts;
    } else if (p != 0.0 && std::abs(p) < kBigInv && std::abs(pm1) < kBigInv) {
      p *= kBig;
      pm1 *= kBig;
      --shifts;
    }
  }
}

SpectralBasis build_basis(int J, int Q) {
  if (J < 1) throw std::invalid_argument("build_basis: J >= 1 required");
  if (Q < 2 * J + 2)
    throw std::invalid_argument("build_basis: Q >= 2J+2 required for quadrature exactness");

  SpectralBasis b;
  b.modes = J;
  b.quad_order = Q;

  // Golub-Welsch: Jacobi matrix of the Hermite weight has zero diagonal and
  // off-diagonal sqrt(i/2).
  std::vector<double> diag(Q, 0.0), off(Q - 1);
  for (int i = 1; i < Q; ++i) off[i - 1] = std::sqrt(0.5 * i);
  b.nodes = tridiag_eigenvalues(std::move(diag), std::move(off));

  // Weights for plain dx integrals of Gaussian-weighted integrands:
  // w_q = 1 / sum_{j<=Q} h_j(x_q)^2. Modest magnitudes at every node, so no
  // e^{x^2} blowup for large Q.
  b.weights.resize(Q);
  std::vector<double> col(Q);
  std::vector<double> all(static_cast<std::size_t>(Q) * Q);
  for (int q = 0; q < Q; ++q) {
    hermite_eval(Q, b.nodes[q], col);
    double s = 0.0;
    for (int j = 0; j < Q; ++j) {
      s += col[j] * col[j];
      all[static_cast<std::size_t>(j) * Q + q] = col[j];
    }
    b.weights[q] = 1.0 / s;
  }
  b.values.assign(all.begin(), all.begin() + static_cast<std::size_t>(J) * Q);

  for (int q = 0; q + 1 < Q; ++q)
    if (!(b.nodes[q] < b.nodes[q + 1]))
      throw std::runtime_error("build_basis: nodes not strictly increasing");
  for (double w : b.weights)
    if (!(w > 0.0)) throw std::runtime_error("build_basis: nonpositive weight");
  return b;
}

RMat assemble_bilinear(const SpectralBasis& basis, std::span<const double> v_at_nodes) {
  const int J = basis.modes, Q = basis.quad_order;
  if (static_cast<int>(v_at_nodes.size()) != Q)
    throw std::invalid_argument("assemble_bilinear: sample length mismatch");
  std::vector<double> wv(Q);
  for (int q = 0; q < Q; ++q) {
    if (!std::isfinite(v_at_nodes[q]))
      throw std::invalid_argument("assemble_bilinear: non-finite sample at node " +
                                  std::to_string(q));
    wv[q] = basis.weights[q] * v_at_nodes[q];
  }
  RMat B(J, J);
  for (int j = 0; j < J; ++j) {
    const double* hj = basis.values.data() + static_cast<std::size_t>(j) * Q;
    for (int l = j; l < J; ++l) {
      const double* hl = basis.values.data() + static_cast<std::size_t>(l) * Q;
      const double s = kernels::wdot(wv.data(), hj, hl, Q);
      B(j, l) = s;
      B(l, j) = s;
    }
  }
  return B;
}

std::vector<cplx> synthesize(const SpectralBasis& basis, std::span<const cplx> coeffs) {
  const int J = basis.modes, Q = basis.quad_order;
  if (static_cast<int>(coeffs.size()) != J)
    throw std::invalid_argument("synthesize: coefficient length mismatch");
  std::vector<cplx> out(Q);
  for (int j = 0; j < J; ++j) {
    const double* hj = basis.values.data() + static_cast<std::size_t>(j) * Q;
    for (int q = 0; q < Q; ++q) out[q] += coeffs[j] * hj[q];
  }
  return out;
}

std::vector<double> synthesize_real(const SpectralBasis& basis, std::span<const double> coeffs) {
  const int J = basis.modes, Q = basis.quad_order;
  if (static_cast<int>(coeffs.size()) != J)
    throw std::invalid_argument("synthesize: coefficient length mismatch");
  std::vector<double> out(Q);
  for (int j = 0; j < J; ++j) {
    const double* hj = basis.values.data() + static_cast<std::size_t>(j) * Q;
    for (int q = 0; q < Q; ++q) out[q] += coeffs[j] * hj[q];
  }
  return out;
}

std::vector<cplx> analyze(const SpectralBasis& basis, std::span<const cplx> samples) {
  const int J = basis.modes, Q = basis.quad_order;
  if (static_cast<int>(samples.size()) != Q)
    throw std::invalid_argument("analyze: sample length mismatch");
  std::vector<cplx> c(J);
  for (int j = 0; j < J; ++j) {
    const double* hj = basis.values.data() + static_cast<std::size_t>(j) * Q;
    cplx s = 0.0;
    for (int q = 0; q < Q; ++q) s += basis.weights[q] * samples[q] * hj[q];
    c[j] = s;
  }
  return c;
}

std::vector<double> analyze_real(const SpectralBasis& basis, std::span<const double> samples) {
  const int J = basis.modes, Q = basis.quad_order;
  if (static_cast<int>(samples.size()) != Q)
    throw std::invalid_argument("analyze: sample length mismatch");
  std::vector<double> c(J);
  for (int j = 0; j < J; ++j) {
    const double* hj = basis.values.data() + static_cast<std::size_t>(j) * Q;
    c[j] = kernels::wdot(basis.weights.data(), samples.data(), hj, Q);
  }
  return c;
}

}  // namespace kamosc
