#include "kamosc/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace kamosc {

int Monomial::weighted_degree() const { return 2 * order_y() + order_z(); }

int Monomial::order_y() const {
  int s = 0;
  for (int a = 0; a < angles; ++a) s += m[a];
  return s;
}

int Monomial::order_z() const {
  int s = 0;
  for (int i = 0; i < nq; ++i) s += qe[i];
  for (int i = 0; i < nqb; ++i) s += qbe[i];
  return s;
}

int Monomial::k_inf() const {
  int s = 0;
  for (int a = 0; a < angles; ++a) s = std::max(s, std::abs(static_cast<int>(k[a])));
  return s;
}

int Monomial::k_l1() const {
  int s = 0;
  for (int a = 0; a < angles; ++a) s += std::abs(static_cast<int>(k[a]));
  return s;
}

int Monomial::q_exponent(int mode) const {
  for (int i = 0; i < nq; ++i)
    if (qj[i] == mode) return qe[i];
  return 0;
}

int Monomial::qbar_exponent(int mode) const {
  for (int i = 0; i < nqb; ++i)
    if (qbj[i] == mode) return qbe[i];
  return 0;
}

int Monomial::max_mode() const {
  int s = 0;
  for (int i = 0; i < nq; ++i) s = std::max(s, static_cast<int>(qj[i]));
  for (int i = 0; i < nqb; ++i) s = std::max(s, static_cast<int>(qbj[i]));
  return s;
}

bool Monomial::is_zero_key() const {
  if (nq || nqb) return false;
  for (int a = 0; a < angles; ++a)
    if (k[a] != 0 || m[a] != 0) return false;
  return true;
}

namespace {
void add_slot(std::uint8_t& count, std::array<std::uint16_t, kMaxSlots>& js,
              std::array<std::uint8_t, kMaxSlots>& es, int mode, int expo) {
  if (mode < 1) throw std::invalid_argument("monomial: mode index must be >= 1");
  if (expo == 0) return;
  int pos = 0;
  while (pos < count && js[pos] < mode) ++pos;
  if (pos < count && js[pos] == mode) {
    const int merged = es[pos] + expo;
    if (merged < 0) throw std::invalid_argument("monomial: negative exponent");
    if (merged == 0) {
      for (int i = pos; i + 1 < count; ++i) {
        js[i] = js[i + 1];
        es[i] = es[i + 1];
      }
      --count;
      return;
    }
    es[pos] = static_cast<std::uint8_t>(merged);
    return;
  }
  if (expo < 0) throw std::invalid_argument("monomial: negative exponent");
  if (count == kMaxSlots) throw std::invalid_argument("monomial: slot capacity exceeded");
  for (int i = count; i > pos; --i) {
    js[i] = js[i - 1];
    es[i] = es[i - 1];
  }
  js[pos] = static_cast<std::uint16_t>(mode);
  es[pos] = static_cast<std::uint8_t>(expo);
  ++count;
}
}  // namespace

void Monomial::add_q(int mode, int expo) { add_slot(nq, qj, qe, mode, expo); }
void Monomial::add_qbar(int mode, int expo) { add_slot(nqb, qbj, qbe, mode, expo); }

Monomial Monomial::conjugate_partner() const {
  Monomial p = *this;
  for (int a = 0; a < angles; ++a) p.k[a] = static_cast<std::int16_t>(-k[a]);
  std::swap(p.nq, p.nqb);
  std::swap(p.qj, p.qbj);
  std::swap(p.qe, p.qbe);
  return p;
}

bool MonomialLess::operator()(const Monomial& a, const Monomial& b) const {
  if (a.angles != b.angles) return a.angles < b.angles;
  for (int i = 0; i < a.angles; ++i)
    if (a.k[i] != b.k[i]) return a.k[i] < b.k[i];
  for (int i = 0; i < a.angles; ++i)
    if (a.m[i] != b.m[i]) return a.m[i] < b.m[i];
  if (a.nq != b.nq) return a.nq < b.nq;
  for (int i = 0; i < a.nq; ++i) {
    if (a.qj[i] != b.qj[i]) return a.qj[i] < b.qj[i];
    if (a.qe[i] != b.qe[i]) return a.qe[i] < b.qe[i];
  }
  if (a.nqb != b.nqb) return a.nqb < b.nqb;
  for (int i = 0; i < a.nqb; ++i) {
    if (a.qbj[i] != b.qbj[i]) return a.qbj[i] < b.qbj[i];
    if (a.qbe[i] != b.qbe[i]) return a.qbe[i] < b.qbe[i];
  }
  return false;
}

TaylorHamiltonian::TaylorHamiltonian(int n, int J, int K, int D)
    : angles(n), modes(J), fourier_cutoff(K), degree_cap(D) {
  if (n < 1 || n > kMaxAngles) throw std::invalid_argument("TaylorHamiltonian: bad angle count");
  if (J < 0 || K < 0 || D < 0) throw std::invalid_argument("TaylorHamiltonian: bad bounds");
}

void TaylorHamiltonian::add_term(const Monomial& key, cplx value) {
  if (key.angles != angles) throw std::invalid_argument("add_term: angle dimension mismatch");
  if (key.k_inf() > fourier_cutoff) throw std::invalid_argument("add_term: |k| beyond cutoff");
  if (key.weighted_degree() > degree_cap) throw std::invalid_argument("add_term: degree beyond cap");
  if (key.max_mode() > modes) throw std::invalid_argument("add_term: mode index beyond J");
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
    throw std::invalid_argument("add_term: non-finite coefficient");
  auto [it, inserted] = coeffs.try_emplace(key, value);
  if (!inserted) {
    it->second += value;
    if (it->second == cplx(0.0, 0.0)) coeffs.erase(it);
  } else if (value == cplx(0.0, 0.0)) {
    coeffs.erase(it);
  }
}

cplx TaylorHamiltonian::coeff(const Monomial& key) const {
  auto it = coeffs.find(key);
  return it == coeffs.end() ? cplx(0.0) : it->second;
}

NormParams::NormParams(double s_, double r_, double beta_, double psi_p_, double domain_r_)
    : s(s_), r(r_), beta(beta_), psi_p(psi_p_), domain_r(domain_r_) {
  if (!(s > 0.0) || !(r > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("NormParams: s, r, beta must be positive");
  if (psi_p < 2.0) throw std::invalid_argument("NormParams: psi_p >= 2 required (Psi(j) >= j)");
}

double NormParams::psi(int j) const { return std::pow(static_cast<double>(j), 0.5 * psi_p); }

namespace {

struct ZSlotRef {
  int mode;
  int expo;
  bool bar;
};

int collect_slots(const Monomial& key, std::array<ZSlotRef, kMaxSlots * 2>& out) {
  int c = 0;
  for (int i = 0; i < key.nq; ++i) out[c++] = {key.qj[i], key.qe[i], false};
  for (int i = 0; i < key.nqb; ++i) out[c++] = {key.qbj[i], key.qbe[i], true};
  return c;
}

/// Majorant weight of the full monomial (coefficient excluded).
double monomial_weight(const Monomial& key, const NormParams& p) {
  double w = std::exp(key.k_l1() * p.s);
  const double rd = p.rd();
  for (int a = 0; a < key.angles; ++a)
    for (int t = 0; t < key.m[a]; ++t) w *= rd * rd;
  std::array<ZSlotRef, kMaxSlots * 2> slots;
  const int c = collect_slots(key, slots);
  for (int i = 0; i < c; ++i) w *= std::pow(rd / p.psi(slots[i].mode), slots[i].expo);
  return w;
}

}  // namespace

NormReport majorant_norm(const TaylorHamiltonian& H, const NormParams& p) {
  NormReport rep;
  const double rd = p.rd();
  std::map<int, double> ybound;              // axis -> sum of |d/dy_a| majorants
  std::map<std::pair<int, int>, double> zb;  // (mode, bar) -> first-derivative bound
  std::map<std::array<int, 4>, double> zzb;  // (mode1, bar1, mode2, bar2) -> 2nd-deriv bound

  for (const auto& [key, c] : H.coeffs) {
    const double ac = std::abs(c);
    const double w = monomial_weight(key, p);
    rep.sup_part += ac * w;

    for (int a = 0; a < key.angles; ++a)
      if (key.m[a] > 0) ybound[a] += ac * key.m[a] * w / (rd * rd);

    std::array<ZSlotRef, kMaxSlots * 2> slots;
    const int nslots = collect_slots(key, slots);
    for (int i = 0; i < nslots; ++i) {
      const auto& si = slots[i];
      const double zfac = rd / p.psi(si.mode);
      zb[{si.mode, si.bar}] += ac * si.expo * w / zfac;
      // second derivative in the same variable
      if (si.expo >= 2)
        zzb[{si.mode, si.bar, si.mode, si.bar}] += ac * si.expo * (si.expo - 1) * w / (zfac * zfac);
      for (int l = i + 1; l < nslots; ++l) {
        const auto& sl = slots[l];
        const double zfac2 = rd / p.psi(sl.mode);
        std::array<int, 4> idx{si.mode, si.bar, sl.mode, sl.bar};
        if (std::tie(sl.mode, sl.bar) < std::tie(si.mode, si.bar))
          idx = {sl.mode, sl.bar, si.mode, si.bar};
        zzb[idx] += ac * si.expo * sl.expo * w / (zfac * zfac2);
      }
    }
  }

  rep.sup_part /= p.r * p.r;
  for (const auto& [a, v] : ybound) rep.y_deriv_part = std::max(rep.y_deriv_part, v);
  for (const auto& [jb, v] : zb)
    rep.z_deriv_part = std::max(rep.z_deriv_part, std::pow(jb.first, p.beta) * v / p.r);
  for (const auto& [idx, v] : zzb)
    rep.zz_deriv_part =
        std::max(rep.zz_deriv_part, std::pow(static_cast<double>(idx[0]) * idx[2], p.beta) * v);
  rep.total = std::max({rep.sup_part, rep.y_deriv_part, rep.z_deriv_part, rep.zz_deriv_part});
  return rep;
}

double vector_field_majorant(const TaylorHamiltonian& H, const NormParams& p) {
  const double rd = p.rd();
  std::vector<double> theta_dot(H.angles, 0.0), y_dot(H.angles, 0.0);
  std::map<std::pair<int, bool>, double> zdot;  // (mode, bar) -> bound of dH/dw
  for (const auto& [key, c] : H.coeffs) {
    const double ac = std::abs(c);
    const double w = monomial_weight(key, p);
    for (int a = 0; a < key.angles; ++a) {
      if (key.m[a] > 0) theta_dot[a] += ac * key.m[a] * w / (rd * rd);
      if (key.k[a] != 0) y_dot[a] += ac * std::abs(static_cast<int>(key.k[a])) * w;
    }
    std::array<ZSlotRef, kMaxSlots * 2> slots;
    const int nslots = collect_slots(key, slots);
    for (int i = 0; i < nslots; ++i) {
      const double zfac = rd / p.psi(slots[i].mode);
      zdot[{slots[i].mode, slots[i].bar}] += ac * slots[i].expo * w / zfac;
    }
  }
  double xmax = 0.0, ymax = 0.0;
  for (double v : theta_dot) xmax = std::max(xmax, v);
  for (double v : y_dot) ymax = std::max(ymax, v);
  double u2 = 0.0, v2 = 0.0;
  for (const auto& [jb, v] : zdot) {
    const double t = p.psi(jb.first) * v;
    (jb.second ? u2 : v2) += t * t;  // dH/dzbar drives zdot, dH/dz drives zbardot
  }
  return xmax + ymax / (p.r * p.r) + (std::sqrt(u2) + std::sqrt(v2)) / p.r;
}

double second_derivative_plus_weight(const TaylorHamiltonian& H, const NormParams& p) {
  const double rd = p.rd();
  std::map<std::array<int, 4>, double> zzb;
  for (const auto& [key, c] : H.coeffs) {
    const double ac = std::abs(c);
    const double w = monomial_weight(key, p);
    std::array<ZSlotRef, kMaxSlots * 2> slots;
    const int nslots = collect_slots(key, slots);
    for (int i = 0; i < nslots; ++i) {
      const auto& si = slots[i];
      const double zfac = rd / p.psi(si.mode);
      if (si.expo >= 2)
        zzb[{si.mode, si.bar, si.mode, si.bar}] += ac * si.expo * (si.expo - 1) * w / (zfac * zfac);
      for (int l = i + 1; l < nslots; ++l) {
        const auto& sl = slots[l];
        const double zfac2 = rd / p.psi(sl.mode);
        std::array<int, 4> idx{si.mode, si.bar, sl.mode, sl.bar};
        if (std::tie(sl.mode, sl.bar) < std::tie(si.mode, si.bar))
          idx = {sl.mode, sl.bar, si.mode, si.bar};
        zzb[idx] += ac * si.expo * sl.expo * w / (zfac * zfac2);
      }
    }
  }
  double worst = 0.0;
  for (const auto& [idx, v] : zzb) {
    const double wgt = std::pow(static_cast<double>(idx[0]) * idx[2], p.beta) *
                       (1.0 + std::abs(idx[0] - idx[2]));
    worst = std::max(worst, wgt * v);
  }
  return worst;
}

namespace {

/// Accumulates (sum, absolute mass) per key; keys whose final sum is below
/// the roundoff of their own accumulation are numerical zeros and dropped,
/// so algebraic cancellations ({A,A}, Jacobi sums) come out empty.
constexpr double kCancelTol = 1e-14;

struct ProductTarget {
  std::map<Monomial, std::pair<cplx, double>, MonomialLess> main, tail;
  int cap;
  int result_K;

  void emit(const Monomial& key, cplx value) {
    if (value == cplx(0.0, 0.0)) return;
    auto& dest = (key.weighted_degree() <= cap && key.k_inf() <= result_K) ? main : tail;
    auto [it, fresh] = dest.try_emplace(key, std::make_pair(value, std::abs(value)));
    if (!fresh) {
      it->second.first += value;
      it->second.second += std::abs(value);
    }
  }

  void finalize(TaylorHamiltonian& ham, TaylorHamiltonian& tail_ham, double& tail_mass) const {
    for (const auto& [key, sc] : main)
      if (std::abs(sc.first) > kCancelTol * sc.second) ham.add_term(key, sc.first);
    for (const auto& [key, sc] : tail)
      if (std::abs(sc.first) > kCancelTol * sc.second) {
        tail_ham.add_term(key, sc.first);
        tail_mass += std::abs(sc.first);
      }
  }
};

Monomial merge_product(const Monomial& a, const Monomial& b) {
  Monomial r = a;
  for (int i = 0; i < a.angles; ++i) {
    r.k[i] = static_cast<std::int16_t>(a.k[i] + b.k[i]);
    r.m[i] = static_cast<std::uint8_t>(a.m[i] + b.m[i]);
  }
  for (int i = 0; i < b.nq; ++i) r.add_q(b.qj[i], b.qe[i]);
  for (int i = 0; i < b.nqb; ++i) r.add_qbar(b.qbj[i], b.qbe[i]);
  return r;
}

using Entry = std::pair<const Monomial*, cplx>;

}  // namespace

BracketResult poisson_bracket(const TaylorHamiltonian& A, const TaylorHamiltonian& B, int cap,
                              int result_K) {
  if (A.angles != B.angles || A.modes != B.modes)
    throw std::invalid_argument("poisson_bracket: dimension mismatch");
  if (cap < 0) throw std::invalid_argument("poisson_bracket: cap >= 0 required");
  const int KA = A.fourier_cutoff, KB = B.fourier_cutoff;
  if (result_K < 0) result_K = std::max(KA, KB);

  BracketResult out;
  out.ham = TaylorHamiltonian(A.angles, A.modes, result_K, cap);
  out.tail = TaylorHamiltonian(A.angles, A.modes, KA + KB,
                               std::max(2, A.degree_cap + B.degree_cap));
  ProductTarget target;
  target.cap = cap;
  target.result_K = result_K;

  // theta/y block: sum_a dA/dtheta_a dB/dy_a - dA/dy_a dB/dtheta_a
  for (int a = 0; a < A.angles; ++a) {
    std::vector<Entry> a_y, b_y;
    for (const auto& [key, c] : A.coeffs)
      if (key.m[a] > 0) a_y.emplace_back(&key, c);
    for (const auto& [key, c] : B.coeffs)
      if (key.m[a] > 0) b_y.emplace_back(&key, c);

    if (!b_y.empty()) {
      for (const auto& [keyA, cA] : A.coeffs) {
        if (keyA.k[a] == 0) continue;
        const cplx dA = cA * cplx(0.0, static_cast<double>(keyA.k[a]));
        for (const auto& [keyBp, cB] : b_y) {
          Monomial dkeyB = *keyBp;
          dkeyB.m[a] -= 1;
          target.emit(merge_product(keyA, dkeyB), dA * cB * static_cast<double>(keyBp->m[a]));
        }
      }
    }
    if (!a_y.empty()) {
      for (const auto& [keyB, cB] : B.coeffs) {
        if (keyB.k[a] == 0) continue;
        const cplx dB = cB * cplx(0.0, static_cast<double>(keyB.k[a]));
        for (const auto& [keyAp, cA] : a_y) {
          Monomial dkeyA = *keyAp;
          dkeyA.m[a] -= 1;
          target.emit(merge_product(dkeyA, keyB), -dB * cA * static_cast<double>(keyAp->m[a]));
        }
      }
    }
  }

  // z block: i sum_j (dA/dz_j dB/dzbar_j - dA/dzbar_j dB/dz_j)
  std::map<int, std::vector<Entry>> b_by_q, b_by_qb;
  for (const auto& [key, c] : B.coeffs) {
    for (int i = 0; i < key.nq; ++i) b_by_q[key.qj[i]].emplace_back(&key, c);
    for (int i = 0; i < key.nqb; ++i) b_by_qb[key.qbj[i]].emplace_back(&key, c);
  }
  const cplx iunit(0.0, 1.0);
  for (const auto& [keyA, cA] : A.coeffs) {
    for (int i = 0; i < keyA.nq; ++i) {
      const int mode = keyA.qj[i];
      auto it = b_by_qb.find(mode);
      if (it == b_by_qb.end()) continue;
      Monomial dA = keyA;
      dA.add_q(mode, -1);
      const cplx fA = cA * static_cast<double>(keyA.qe[i]);
      for (const auto& [keyBp, cB] : it->second) {
        Monomial dB = *keyBp;
        dB.add_qbar(mode, -1);
        target.emit(merge_product(dA, dB),
                    iunit * fA * cB * static_cast<double>(keyBp->qbar_exponent(mode)));
      }
    }
    for (int i = 0; i < keyA.nqb; ++i) {
      const int mode = keyA.qbj[i];
      auto it = b_by_q.find(mode);
      if (it == b_by_q.end()) continue;
      Monomial dA = keyA;
      dA.add_qbar(mode, -1);
      const cplx fA = cA * static_cast<double>(keyA.qbe[i]);
      for (const auto& [keyBp, cB] : it->second) {
        Monomial dB = *keyBp;
        dB.add_q(mode, -1);
        target.emit(merge_product(dA, dB),
                    -iunit * fA * cB * static_cast<double>(keyBp->q_exponent(mode)));
      }
    }
  }
  target.finalize(out.ham, out.tail, out.tail_abs_mass);
  return out;
}

std::pair<TaylorHamiltonian, TaylorHamiltonian> taylor_truncate(const TaylorHamiltonian& P) {
  TaylorHamiltonian R(P.angles, P.modes, P.fourier_cutoff, 2);
  TaylorHamiltonian tail(P.angles, P.modes, P.fourier_cutoff, P.degree_cap);
  for (const auto& [key, c] : P.coeffs) {
    if (key.weighted_degree() <= 2)
      R.add_term(key, c);
    else
      tail.add_term(key, c);
  }
  return {std::move(R), std::move(tail)};
}

TaylorHamiltonian mean_value(const TaylorHamiltonian& R) {
  TaylorHamiltonian N(R.angles, R.modes, R.fourier_cutoff, 2);
  for (const auto& [key, c] : R.coeffs) {
    if (key.weighted_degree() > 2) throw std::invalid_argument("mean_value: degree > 2 input");
    if (key.k_inf() != 0) continue;
    const bool y_term = key.order_y() == 1 && key.order_z() == 0;
    bool diag_term = false;
    if (key.order_y() == 0 && key.nq == 1 && key.nqb == 1)
      diag_term = key.qj[0] == key.qbj[0] && key.qe[0] == 1 && key.qbe[0] == 1;
    if (y_term || diag_term) N.add_term(key, c);
  }
  return N;
}

bool is_real_symmetric(const TaylorHamiltonian& H, double tol) {
  double scale = 0.0;
  for (const auto& [key, c] : H.coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return true;
  for (const auto& [key, c] : H.coeffs) {
    const cplx partner = H.coeff(key.conjugate_partner());
    if (std::abs(partner - std::conj(c)) > tol * scale) return false;
  }
  return true;
}

TaylorHamiltonian make_normal_form(std::span<const double> omega, std::span<const double> Omega,
                                   int K, int D) {
  const int n = static_cast<int>(omega.size());
  const int J = static_cast<int>(Omega.size());
  TaylorHamiltonian N(n, J, K, D);
  for (int a = 0; a < n; ++a) {
    Monomial key;
    key.angles = static_cast<std::int8_t>(n);
    key.m[a] = 1;
    N.add_term(key, omega[a]);
  }
  for (int j = 1; j <= J; ++j) {
    Monomial key;
    key.angles = static_cast<std::int8_t>(n);
    key.add_q(j, 1);
    key.add_qbar(j, 1);
    N.add_term(key, Omega[j - 1]);
  }
  return N;
}

cplx evaluate(const TaylorHamiltonian& H, std::span<const cplx> theta, std::span<const cplx> y,
              std::span<const cplx> z, std::span<const cplx> zbar) {
  if (static_cast<int>(theta.size()) != H.angles || static_cast<int>(y.size()) != H.angles)
    throw std::invalid_argument("evaluate: angle dimension mismatch");
  cplx total = 0.0;
  for (const auto& [key, c] : H.coeffs) {
    cplx term = c;
    cplx phase = 0.0;
    for (int a = 0; a < key.angles; ++a) {
      phase += static_cast<double>(key.k[a]) * theta[a];
      for (int t = 0; t < key.m[a]; ++t) term *= y[a];
    }
    term *= std::exp(cplx(0.0, 1.0) * phase);
    for (int i = 0; i < key.nq; ++i)
      for (int t = 0; t < key.qe[i]; ++t) term *= z[key.qj[i] - 1];
    for (int i = 0; i < key.nqb; ++i)
      for (int t = 0; t < key.qbe[i]; ++t) term *= zbar[key.qbj[i] - 1];
    total += term;
  }
  return total;
}

void dump(const TaylorHamiltonian& H, std::ostream& os) {
  os << "taylorham n=" << H.angles << " J=" << H.modes << " K=" << H.fourier_cutoff
     << " D=" << H.degree_cap << " terms=" << H.coeffs.size() << "\n";
  char buf[64];
  for (const auto& [key, c] : H.coeffs) {
    for (int a = 0; a < key.angles; ++a) os << (a ? " " : "") << key.k[a];
    os << " |";
    for (int a = 0; a < key.angles; ++a) os << " " << static_cast<int>(key.m[a]);
    os << " |";
    for (int i = 0; i < key.nq; ++i) os << " " << key.qj[i] << ":" << static_cast<int>(key.qe[i]);
    os << " |";
    for (int i = 0; i < key.nqb; ++i)
      os << " " << key.qbj[i] << ":" << static_cast<int>(key.qbe[i]);
    os << " |";
    std::snprintf(buf, sizeof buf, " %.17g %.17g", c.real(), c.imag());
    os << buf << "\n";
  }
}

TaylorHamiltonian parse(std::istream& is) {
  std::string tag;
  is >> tag;
  if (tag != "taylorham") throw std::runtime_error("parse: bad header tag");
  auto read_kv = [&](const char* name) {
    std::string tok;
    is >> tok;
    const std::string prefix = std::string(name) + "=";
    if (tok.rfind(prefix, 0) != 0) throw std::runtime_error("parse: expected " + prefix);
    return std::stol(tok.substr(prefix.size()));
  };
  const int n = static_cast<int>(read_kv("n"));
  const int J = static_cast<int>(read_kv("J"));
  const int K = static_cast<int>(read_kv("K"));
  const int D = static_cast<int>(read_kv("D"));
  const long terms = read_kv("terms");
  TaylorHamiltonian H(n, J, K, D);
  std::string line;
  std::getline(is, line);  // finish header line
  for (long t = 0; t < terms; ++t) {
    if (!std::getline(is, line)) throw std::runtime_error("parse: truncated dump");
    std::istringstream ls(line);
    Monomial key;
    key.angles = static_cast<std::int8_t>(n);
    std::string tok;
    for (int a = 0; a < n; ++a) {
      ls >> tok;
      key.k[a] = static_cast<std::int16_t>(std::stoi(tok));
    }
    ls >> tok;
    if (tok != "|") throw std::runtime_error("parse: expected separator after k");
    for (int a = 0; a < n; ++a) {
      ls >> tok;
      key.m[a] = static_cast<std::uint8_t>(std::stoi(tok));
    }
    ls >> tok;
    if (tok != "|") throw std::runtime_error("parse: expected separator after m");
    auto read_slots = [&](bool bar) {
      while (ls >> tok) {
        if (tok == "|") return;
        const auto colon = tok.find(':');
        if (colon == std::string::npos) throw std::runtime_error("parse: bad slot " + tok);
        const int mode = std::stoi(tok.substr(0, colon));
        const int expo = std::stoi(tok.substr(colon + 1));
        if (bar)
          key.add_qbar(mode, expo);
        else
          key.add_q(mode, expo);
      }
      throw std::runtime_error("parse: missing separator in slots");
    };
    read_slots(false);
    read_slots(true);
    double re = 0.0, im = 0.0;
    ls >> re >> im;
    if (ls.fail()) throw std::runtime_error("parse: bad coefficient");
    H.add_term(key, cplx(re, im));
  }
  return H;
}

}  // namespace kamosc
