#pragma once

// The Fermat curve X^ell + Y^ell = Z^ell and its quotients C_k : v^ell = u (u+1)^(ell-k-1).
// Point counts by enumeration (oracle) and by Jacobi-sum traces, and local
// Frobenius polynomials over F = Q(mu_ell) and over Q.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbias/arith.hpp"
#include "fbias/cyclotomic.hpp"
#include "fbias/error.hpp"
#include "fbias/fields.hpp"
#include "fbias/jacobi.hpp"

namespace fbias {

inline constexpr u64 kDefaultOracleCap = 100000;

struct CurveId {
  enum class Kind { Fermat, Quotient };
  Kind kind = Kind::Fermat;
  int k = 0;
  int ell = 3;

  static CurveId fermat(int ell) { return CurveId{Kind::Fermat, 0, ell}; }
  static CurveId quotient(int ell, int k) {
    if (k < 1 || k > ell - 2)
      throw std::invalid_argument("quotient index k must be in [1, ell-2], got " + std::to_string(k));
    return CurveId{Kind::Quotient, k, ell};
  }

  bool is_fermat() const { return kind == Kind::Fermat; }

  int genus() const { return is_fermat() ? (ell - 1) * (ell - 2) / 2 : (ell - 1) / 2; }

  std::string name() const { return is_fermat() ? "fermat" : "quotient-" + std::to_string(k); }

  // Eigen-index pairs (k t, t): all of I_ell for the Fermat curve (ordered by
  // (k, t)), the single orbit of (k, 1) for C_k.
  std::vector<std::pair<int, int>> pairs() const {
    if (is_fermat()) return IndexSet(ell).pairs();
    std::vector<std::pair<int, int>> out;
    for (int t = 1; t < ell; ++t) out.emplace_back(mod_ell(static_cast<long long>(k) * t, ell), t);
    return out;
  }

  friend bool operator==(const CurveId&, const CurveId&) = default;
};

// Every curve of level ell: the Fermat curve then C_1..C_{ell-2}.
inline std::vector<CurveId> all_curves(int ell) {
  std::vector<CurveId> out{CurveId::fermat(ell)};
  for (int k = 1; k <= ell - 2; ++k) out.push_back(CurveId::quotient(ell, k));
  return out;
}

struct ApRecord {
  u64 p = 0;
  CurveId curve;
  long long ap = 0;
};

inline bool within_weil_bound(const ApRecord& r) {
  const long long g = r.curve.genus();
  const BigInt a = r.ap;
  return a * a <= BigInt(4) * g * g * r.p;
}

inline void write_ap_csv(std::ostream& os, const std::vector<ApRecord>& records) {
  os << "l,curve,p,ap\n";
  for (const auto& r : records) os << r.curve.ell << ',' << r.curve.name() << ',' << r.p << ',' << r.ap << '\n';
}

namespace detail {

inline void check_oracle_input(u64 p, int ell, u64 cap) {
  if (!is_prime(p)) throw std::invalid_argument("oracle: p must be prime");
  if (p % static_cast<u64>(ell) == 0) throw RamifiedPrime(p);
  if (p > cap)
    throw std::invalid_argument("brute-force oracle limited to p <= " + std::to_string(cap) + ", got " +
                                std::to_string(p));
}

// cnt[w] = #{y in F : y^ell = w}, by enumerating y.
inline std::vector<u64> ell_power_fibers(const GaloisField& field, int ell) {
  std::vector<u64> cnt(field.order(), 0);
  for (u64 y = 0; y < field.order(); ++y) ++cnt[field.pow(y, static_cast<u64>(ell))];
  return cnt;
}

}  // namespace detail

// Projective points of X^ell + Y^ell = Z^ell over F_q, enumerated as
// (x:y:1), (x:1:0) and (1:0:0).
inline u64 count_fermat_over_field(const GaloisField& field, int ell) {
  const auto cnt = detail::ell_power_fibers(field, ell);
  u64 total = 0;
  for (u64 x = 0; x < field.order(); ++x) total += cnt[field.one_minus(field.pow(x, static_cast<u64>(ell)))];
  total += cnt[field.neg(1)];  // (x:1:0) with x^ell = -1
  if (field.add(1, 0) == 0) ++total;  // (1:0:0) lies on the curve only if 1 = 0
  return total;
}

inline u64 count_fermat_bruteforce(u64 p, int ell, u64 cap = kDefaultOracleCap) {
  detail::check_oracle_input(p, ell, cap);
  return count_fermat_over_field(GaloisField(p, 1), ell);
}

// Affine solutions of v^ell = u (u+1)^(ell-k-1) plus the single point at infinity
// of the smooth model (the place over u = infinity is totally ramified since
// gcd(ell, ell-k) = 1).
inline u64 count_quotient_over_field(const GaloisField& field, int ell, int k) {
  if (k < 1 || k > ell - 2) throw std::invalid_argument("quotient index k out of range");
  const auto cnt = detail::ell_power_fibers(field, ell);
  const auto e = static_cast<u64>(ell - k - 1);
  u64 total = 1;
  for (u64 u = 0; u < field.order(); ++u) total += cnt[field.mul(u, field.pow(field.add(u, 1), e))];
  return total;
}

inline u64 count_quotient_bruteforce(u64 p, int ell, int k, u64 cap = kDefaultOracleCap) {
  detail::check_oracle_input(p, ell, cap);
  return count_quotient_over_field(GaloisField(p, 1), ell, k);
}

// Sum of J_(k1,k2)(P) over the curve's pairs at the prime sigma_twist(P); a rational integer.
inline BigInt jacobi_trace(const JacobiAtP& data, const CurveId& curve, int twist = 1) {
  CycInt sum(data.ell);
  for (auto [k1, k2] : curve.pairs()) sum += data.value(twist, k1, k2);
  if (!sum.is_rational())
    throw InvariantViolation("Jacobi trace of " + curve.name() + " at p=" + std::to_string(data.p) +
                             " is not a rational integer");
  return sum.rational_value();
}

// a_p = p + 1 - #C(F_p) from Jacobi sums; zero unless p = 1 (mod ell).
inline long long ap_from_jacobi(const JacobiAtP& data, const CurveId& curve) {
  if (data.ell != curve.ell) throw std::invalid_argument("ap_from_jacobi: level mismatch");
  if (data.f != 1) return 0;
  return static_cast<long long>(jacobi_trace(data, curve));
}

inline long long ap_from_jacobi(u64 p, const CurveId& curve, u64 cap = kDefaultTableCap) {
  if (p % static_cast<u64>(curve.ell) == 0) throw RamifiedPrime(p);
  if (residue_degree(p, static_cast<u64>(curve.ell)) != 1) return 0;
  return ap_from_jacobi(jacobi_sums_at_p(p, curve.ell, cap), curve);
}

// P(T) = 1 + c_1 T + ... with exact coefficients.
struct LocalFactor {
  enum class Base { OverF, OverQ };
  Base base = Base::OverF;
  u64 p = 0;
  int twist = 1;  // prime sigma_twist(P) above p, for OverF
  std::vector<CycInt> coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }

  // Rational integer coefficients, or throws.
  std::vector<BigInt> integer_coeffs() const {
    std::vector<BigInt> out;
    for (const auto& c : coeffs) out.push_back(c.rational_value());
    return out;
  }
};

namespace detail {

inline std::vector<CycInt> poly_mul(const std::vector<CycInt>& a, const std::vector<CycInt>& b) {
  const int ell = a.front().ell();
  std::vector<CycInt> out(a.size() + b.size() - 1, CycInt(ell));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_zero()) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

}  // namespace detail

// Euler factor 1 at the primes above ell.
inline LocalFactor local_factor_at_ell(const CurveId& curve, LocalFactor::Base base = LocalFactor::Base::OverF) {
  return LocalFactor{base, static_cast<u64>(curve.ell), 1, {CycInt::integer(curve.ell, 1)}};
}

// prod over the curve's pairs of (1 - J_(k1,k2)(prime) T).
inline LocalFactor local_factor_over_F(const JacobiAtP& data, const PrimeOfF& prime, const CurveId& curve) {
  if (prime.p != data.p) throw std::invalid_argument("local_factor_over_F: prime/data mismatch");
  std::vector<CycInt> poly{CycInt::integer(data.ell, 1)};
  for (auto [k1, k2] : curve.pairs()) poly = detail::poly_mul(poly, {CycInt::integer(data.ell, 1), -data.value(prime, k1, k2)});
  return LocalFactor{LocalFactor::Base::OverF, data.p, prime.t, std::move(poly)};
}

// Orbits of multiplication by p on the curve's pairs, each of size f.
inline std::vector<std::vector<std::pair<int, int>>> frobenius_orbits(const JacobiAtP& data, const CurveId& curve) {
  const auto pairs = curve.pairs();
  std::vector<char> used(pairs.size(), 0);
  std::vector<std::vector<std::pair<int, int>>> orbits;
  const long long pm = static_cast<long long>(data.p % static_cast<u64>(data.ell));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (used[i]) continue;
    std::vector<std::pair<int, int>> orbit;
    auto cur = pairs[i];
    do {
      auto it = std::find(pairs.begin(), pairs.end(), cur);
      if (it == pairs.end()) throw InvariantViolation("pair set of " + curve.name() + " is not Frobenius-stable");
      used[static_cast<std::size_t>(it - pairs.begin())] = 1;
      orbit.push_back(cur);
      cur = {mod_ell(cur.first * pm, data.ell), mod_ell(cur.second * pm, data.ell)};
    } while (cur != pairs[i]);
    if (static_cast<int>(orbit.size()) != data.f)
      throw InvariantViolation("Frobenius orbit of size " + std::to_string(orbit.size()) + " at p=" +
                               std::to_string(data.p) + " but f=" + std::to_string(data.f));
    orbits.push_back(std::move(orbit));
  }
  return orbits;
}

// The common Jacobi sum J_O(P) on an orbit; all members must agree exactly.
inline CycInt orbit_value(const JacobiAtP& data, const std::vector<std::pair<int, int>>& orbit) {
  CycInt v = data.value(1, orbit.front().first, orbit.front().second);
  for (auto [k1, k2] : orbit) {
    if (!(data.value(1, k1, k2) == v))
      throw InvariantViolation("Jacobi sums differ along a Frobenius orbit at p=" + std::to_string(data.p));
  }
  return v;
}

// P_p(T) over Q: each Frobenius orbit O contributes 1 - J_O T^f.
inline LocalFactor local_factor_over_Q(const JacobiAtP& data, const CurveId& curve) {
  const int ell = data.ell;
  std::vector<CycInt> poly{CycInt::integer(ell, 1)};
  for (const auto& orbit : frobenius_orbits(data, curve)) {
    std::vector<CycInt> factor(static_cast<std::size_t>(data.f) + 1, CycInt(ell));
    factor.front() = CycInt::integer(ell, 1);
    factor.back() = -orbit_value(data, orbit);
    poly = detail::poly_mul(poly, factor);
  }
  for (const auto& c : poly) {
    if (!c.is_rational())
      throw InvariantViolation("local factor over Q at p=" + std::to_string(data.p) + " has irrational coefficients");
  }
  return LocalFactor{LocalFactor::Base::OverQ, data.p, 1, std::move(poly)};
}

// Power sum of the Frobenius eigenvalues over Q: sum_alpha alpha^j, exact.
inline BigInt frobenius_power_sum(const JacobiAtP& data, const CurveId& curve, unsigned j) {
  CycInt sum(data.ell);
  for (const auto& orbit : frobenius_orbits(data, curve)) {
    if (j % static_cast<unsigned>(data.f) != 0) continue;
    sum += CycInt::integer(data.ell, data.f) * cyc_pow(orbit_value(data, orbit), j / static_cast<unsigned>(data.f));
  }
  return sum.rational_value();
}

// #C(F_{p^j}) = p^j + 1 - sum_alpha alpha^j.
inline BigInt point_count_from_jacobi(const JacobiAtP& data, const CurveId& curve, unsigned j) {
  BigInt pj = 1;
  for (unsigned i = 0; i < j; ++i) pj *= data.p;
  return pj + 1 - frobenius_power_sum(data, curve, j);
}

// Frobenius eigenvalues over Q (not normalized): the f-th roots of each orbit's J_O,
// sorted by argument then modulus.
inline std::vector<std::complex<double>> frobenius_eigenvalues_over_Q(const JacobiAtP& data, const CurveId& curve) {
  std::vector<std::complex<double>> out;
  for (const auto& orbit : frobenius_orbits(data, curve)) {
    const auto z = embed(orbit_value(data, orbit));
    const double r = std::pow(std::abs(z), 1.0 / data.f);
    const double theta = std::arg(z) / data.f;
    for (int m = 0; m < data.f; ++m) out.push_back(std::polar(r, theta + 2.0 * std::numbers::pi * m / data.f));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    const double aa = std::arg(a), ab = std::arg(b);
    if (aa != ab) return aa < ab;
    return std::abs(a) < std::abs(b);
  });
  return out;
}

}  // namespace fbias
