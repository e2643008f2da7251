#include "kamosc/homological.hpp"

#include <cmath>

namespace kamosc {

namespace {

/// l = q - qbar as (mode, coefficient) pairs; |l| <= 2 for degree-2 input.
std::vector<std::pair<int, int>> l_of_key(const Monomial& key) {
  std::vector<std::pair<int, int>> l;
  for (int i = 0; i < key.nq; ++i) l.emplace_back(key.qj[i], key.qe[i]);
  for (int i = 0; i < key.nqb; ++i) l.emplace_back(key.qbj[i], -key.qbe[i]);
  return l;
}

}  // namespace

HomologicalSolution solve_homological(const TaylorHamiltonian& R, const FrequencySet& freqs,
                                      double alpha, double tau, int K,
                                      ResonancePolicy policy) {
  if (R.angles != freqs.n())
    throw std::invalid_argument("solve_homological: angle dimension mismatch");
  if (R.modes > freqs.modes())
    throw std::invalid_argument("solve_homological: mode count beyond stored frequencies");
  HomologicalSolution sol;
  sol.F = TaylorHamiltonian(R.angles, R.modes, std::max(R.fourier_cutoff, K), 2);
  sol.N_hat = TaylorHamiltonian(R.angles, R.modes, R.fourier_cutoff, 2);
  const cplx inv_i(0.0, -1.0);  // 1/i

  for (const auto& [key, c] : R.coeffs) {
    if (key.weighted_degree() > 2)
      throw std::invalid_argument("solve_homological: input degree > 2");

    std::vector<int> kvec(key.angles);
    for (int a = 0; a < key.angles; ++a) kvec[a] = key.k[a];
    const auto l = l_of_key(key);

    // kernel test: |k| + |q - qbar| = 0
    bool on_kernel = key.k_inf() == 0;
    if (on_kernel) {
      auto merged = l;
      for (std::size_t i = 0; i < merged.size(); ++i)
        for (std::size_t j = i + 1; j < merged.size(); ++j)
          if (merged[j].first == merged[i].first) {
            merged[i].second += merged[j].second;
            merged[j].second = 0;
          }
      int net = 0;
      for (const auto& [mode, coeff] : merged) net += std::abs(coeff);
      on_kernel = net == 0;
    }

    if (on_kernel) {
      // k = 0 and q = qbar: the mean-value block goes to N_hat; the pure
      // constant is a gauge term and is kept aside
      const bool keep = (key.order_y() == 1 && key.order_z() == 0) ||
                        (key.order_y() == 0 && key.nq == 1 && key.qj[0] == key.qbj[0] &&
                         key.qe[0] == 1 && key.qbe[0] == 1);
      if (keep)
        sol.N_hat.add_term(key, c);
      else
        sol.kernel_constant += c;
      continue;
    }

    const DivisorIndex idx(kvec, l);
    const double delta = divisor(idx, freqs);
    const double threshold =
        alpha * idx.l_weighted() / (1.0 + std::pow(static_cast<double>(idx.k_l1()), tau));
    if (std::abs(delta) < threshold) {
      if (policy == ResonancePolicy::kThrow)
        throw ResonantDivisor(idx.str(), delta, threshold);
      sol.skipped.push_back({key, delta, threshold});
      continue;
    }
    sol.min_divisor = std::min(sol.min_divisor, std::abs(delta));
    sol.F.add_term(key, c * inv_i / delta);
  }
  return sol;
}

double verify_homological(const HomologicalSolution& sol, const TaylorHamiltonian& R,
                          const FrequencySet& freqs, const NormParams& params) {
  const TaylorHamiltonian N =
      make_normal_form(freqs.omega, std::span<const double>(freqs.Omega).first(R.modes),
                       R.fourier_cutoff, 2);
  BracketResult br = poisson_bracket(sol.F, N, 2, std::max(R.fourier_cutoff, sol.F.fourier_cutoff));
  TaylorHamiltonian defect = br.ham;
  for (const auto& [key, c] : sol.N_hat.coeffs) defect.add_term(key, c);
  if (sol.kernel_constant != cplx(0.0)) {
    Monomial one;
    one.angles = static_cast<std::int8_t>(R.angles);
    defect.add_term(one, sol.kernel_constant);
  }
  for (const auto& [key, c] : R.coeffs) defect.add_term(key, -c);
  return majorant_norm(defect, params).total;
}

std::pair<std::vector<double>, std::vector<double>> frequency_update(
    const TaylorHamiltonian& N_hat, int n, int J, double tol) {
  std::vector<double> omega_hat(n, 0.0), Omega_hat(J, 0.0);
  for (const auto& [key, c] : N_hat.coeffs) {
    if (key.k_inf() != 0)
      throw std::invalid_argument("frequency_update: input is not a mean value");
    if (std::abs(c.imag()) > tol * std::max(1.0, std::abs(c.real())))
      throw NonRealFrequency("frequency_update: non-real coefficient, imag=" +
                             std::to_string(c.imag()));
    if (key.order_y() == 1 && key.order_z() == 0) {
      for (int a = 0; a < key.angles; ++a)
        if (key.m[a] == 1) omega_hat[a] = c.real();
    } else if (key.order_y() == 0 && key.nq == 1 && key.qj[0] == key.qbj[0] &&
               key.qe[0] == 1 && key.qbe[0] == 1) {
      if (key.qj[0] <= J) Omega_hat[key.qj[0] - 1] = c.real();
    } else {
      throw std::invalid_argument("frequency_update: input is not a mean value");
    }
  }
  return {std::move(omega_hat), std::move(Omega_hat)};
}

}  // namespace kamosc
