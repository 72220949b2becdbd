#pragma once

// Residue fields F_q of Q(mu_ell) and their ell-th power residue index tables.
//
// The table realizes chi_P(lambda) = zeta^index[lambda]. Which prime P above p
// this corresponds to is fixed by the canonical generator:
//   * prime fields: the least primitive root mod p;
//   * F_{p^f}: the first monic irreducible of degree f, with polynomials
//     X^f + c_{f-1} X^{f-1} + ... + c_0 ordered by the integer c_0 + c_1 p + ...,
//     and the least element (same encoding) of multiplicative order q - 1.
// Orbit sums (a_p, Euler factors) do not depend on this choice; individual
// Jacobi sums are only defined relative to it.

#include <atomic>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbias/arith.hpp"
#include "fbias/error.hpp"

namespace fbias {

inline constexpr u64 kDefaultTableCap = u64{1} << 27;

// Number of index tables built since program start (instrumentation for cache reuse).
inline std::atomic<u64> g_table_builds{0};

inline u64 table_build_count() { return g_table_builds.load(); }

inline u64 checked_power(u64 p, int f) {
  u64 q = 1;
  for (int i = 0; i < f; ++i) {
    if (q > (~u64{0}) / p) throw std::overflow_error("p^f overflows 64 bits");
    q *= p;
  }
  return q;
}

// p^f, or the largest u64 when that overflows.
inline u64 saturating_power(u64 p, int f) {
  u64 q = 1;
  for (int i = 0; i < f; ++i) {
    if (q > (~u64{0}) / p) return ~u64{0};
    q *= p;
  }
  return q;
}

// A prime of F = Q(mu_ell) above p: the conjugate sigma_t of the canonical prime.
struct PrimeOfF {
  u64 p = 0;
  int f = 1;
  int t = 1;
  u64 q = 0;

  friend bool operator==(const PrimeOfF&, const PrimeOfF&) = default;
};

// Smallest element of each coset of <p> in (Z/ell)^*.
inline std::vector<int> coset_representatives(u64 p, int ell) {
  std::vector<char> seen(static_cast<std::size_t>(ell), 0);
  std::vector<int> reps;
  const u64 pm = p % static_cast<u64>(ell);
  for (int t = 1; t < ell; ++t) {
    if (seen[static_cast<std::size_t>(t)]) continue;
    reps.push_back(t);
    u64 x = static_cast<u64>(t);
    do {
      seen[x] = 1;
      x = x * pm % static_cast<u64>(ell);
    } while (x != static_cast<u64>(t));
  }
  return reps;
}

inline std::vector<PrimeOfF> primes_above(u64 p, int ell) {
  if (p % static_cast<u64>(ell) == 0) return {};
  const int f = residue_degree(p, static_cast<u64>(ell));
  const u64 q = saturating_power(p, f);
  std::vector<PrimeOfF> out;
  for (int t : coset_representatives(p, ell)) out.push_back(PrimeOfF{p, f, t, q});
  return out;
}

// Polynomials over F_p, coefficient vectors low degree first.
namespace poly {

using Poly = std::vector<u64>;

inline void trim(Poly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

inline Poly mod(Poly a, const Poly& m, u64 p) {
  trim(a);
  const std::size_t dm = m.size() - 1;
  const u64 lead_inv = powmod(m.back(), p - 2, p);
  while (a.size() >= m.size()) {
    const u64 c = mulmod(a.back(), lead_inv, p);
    const std::size_t shift = a.size() - 1 - dm;
    for (std::size_t i = 0; i <= dm; ++i) {
      a[shift + i] = (a[shift + i] + p - mulmod(c, m[i], p)) % p;
    }
    trim(a);
  }
  return a;
}

inline Poly mulmod(const Poly& a, const Poly& b, const Poly& m, u64 p) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] = (r[i + j] + fbias::mulmod(a[i], b[j], p)) % p;
  return mod(std::move(r), m, p);
}

inline Poly powmod(Poly base, u64 e, const Poly& m, u64 p) {
  Poly result{1};
  base = mod(std::move(base), m, p);
  while (e > 0) {
    if (e & 1) result = mulmod(result, base, m, p);
    e >>= 1;
    if (e) base = mulmod(base, base, m, p);
  }
  return result;
}

inline Poly gcd(Poly a, Poly b, u64 p) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = mod(a, b, p);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

// Rabin's test for a monic polynomial of degree f.
inline bool is_irreducible(const Poly& m, u64 p) {
  const int f = static_cast<int>(m.size()) - 1;
  if (f < 1) return false;
  if (f == 1) return true;
  auto frobenius_power = [&](int k) {
    Poly h{0, 1};
    for (int i = 0; i < k; ++i) h = powmod(h, p, m, p);
    return h;
  };
  auto minus_x = [&](Poly h) {
    if (h.size() < 2) h.resize(2, 0);
    h[1] = (h[1] + p - 1) % p;
    trim(h);
    return h;
  };
  if (!minus_x(frobenius_power(f)).empty()) return false;
  for (u64 r : distinct_prime_factors(static_cast<u64>(f))) {
    Poly g = gcd(minus_x(frobenius_power(f / static_cast<int>(r))), m, p);
    if (g.size() != 1) return false;
  }
  return true;
}

}  // namespace poly

// F_{p^f} with elements encoded as integers in [0, q): digit i in base p is the
// coefficient of X^i of the polynomial representative.
class GaloisField {
 public:
  GaloisField(u64 p, int f) : p_(p), f_(f), q_(checked_power(p, f)) {
    if (!is_prime(p)) throw std::invalid_argument("GaloisField: p must be prime");
    if (f < 1) throw std::invalid_argument("GaloisField: degree must be positive");
    modulus_ = f == 1 ? poly::Poly{0, 1} : canonical_modulus();
  }

  u64 p() const { return p_; }
  int degree() const { return f_; }
  u64 order() const { return q_; }
  // Low coefficients c_0..c_{f-1}; the modulus is monic of degree f.
  const poly::Poly& modulus() const { return modulus_; }

  u64 add(u64 a, u64 b) const {
    if (f_ == 1) return (a + b) % p_;
    u64 r = 0, scale = 1;
    for (int i = 0; i < f_; ++i) {
      r += ((a % p_ + b % p_) % p_) * scale;
      a /= p_;
      b /= p_;
      scale *= p_;
    }
    return r;
  }

  u64 neg(u64 a) const {
    if (f_ == 1) return a == 0 ? 0 : p_ - a;
    u64 r = 0, scale = 1;
    for (int i = 0; i < f_; ++i) {
      r += ((p_ - a % p_) % p_) * scale;
      a /= p_;
      scale *= p_;
    }
    return r;
  }

  u64 sub(u64 a, u64 b) const { return add(a, neg(b)); }

  u64 one_minus(u64 a) const {
    if (f_ == 1) return a <= 1 ? 1 - a : p_ + 1 - a;
    u64 r = 0, scale = 1;
    for (int i = 0; i < f_; ++i) {
      const u64 d = a % p_;
      const u64 one = i == 0 ? 1 : 0;
      r += ((one + p_ - d) % p_) * scale;
      a /= p_;
      scale *= p_;
    }
    return r;
  }

  u64 mul(u64 a, u64 b) const {
    if (f_ == 1) return fbias::mulmod(a, b, p_);
    const auto fa = static_cast<std::size_t>(f_);
    u64 da[16], db[16], prod[32] = {};
    for (std::size_t i = 0; i < fa; ++i) {
      da[i] = a % p_;
      a /= p_;
      db[i] = b % p_;
      b /= p_;
    }
    for (std::size_t i = 0; i < fa; ++i) {
      if (da[i] == 0) continue;
      for (std::size_t j = 0; j < fa; ++j) prod[i + j] = (prod[i + j] + da[i] * db[j]) % p_;
    }
    // X^f = -(c_0 + ... + c_{f-1} X^{f-1})
    for (std::size_t k = 2 * fa - 2; k >= fa; --k) {
      const u64 c = prod[k];
      if (c == 0) continue;
      prod[k] = 0;
      for (std::size_t i = 0; i < fa; ++i)
        prod[k - fa + i] = (prod[k - fa + i] + (p_ - c) * modulus_[i]) % p_;
    }
    u64 r = 0;
    for (std::size_t i = fa; i-- > 0;) r = r * p_ + prod[i];
    return r;
  }

  u64 pow(u64 a, u64 e) const {
    u64 result = 1;
    while (e > 0) {
      if (e & 1) result = mul(result, a);
      e >>= 1;
      if (e) a = mul(a, a);
    }
    return result;
  }

  // Least element of multiplicative order q - 1.
  u64 canonical_generator() const {
    if (q_ == 2) return 1;
    const auto factors = distinct_prime_factors(q_ - 1);
    for (u64 g = 2; g < q_; ++g) {
      bool ok = true;
      for (u64 r : factors) {
        if (pow(g, (q_ - 1) / r) == 1) {
          ok = false;
          break;
        }
      }
      if (ok) return g;
    }
    throw std::logic_error("GaloisField: no generator found; modulus not irreducible?");
  }

 private:
  poly::Poly canonical_modulus() const {
    if (f_ > 16) throw std::invalid_argument("GaloisField: degree above 16 unsupported");
    const u64 count = checked_power(p_, f_);
    for (u64 code = 0; code < count; ++code) {
      poly::Poly m(static_cast<std::size_t>(f_) + 1, 0);
      u64 c = code;
      for (int i = 0; i < f_; ++i) {
        m[static_cast<std::size_t>(i)] = c % p_;
        c /= p_;
      }
      m.back() = 1;
      if (m[0] == 0) continue;
      if (poly::is_irreducible(m, p_)) {
        m.pop_back();
        return m;
      }
    }
    throw std::logic_error("GaloisField: no irreducible polynomial found");
  }

  u64 p_;
  int f_;
  u64 q_;
  poly::Poly modulus_;
};

// Discrete-log index table mod ell on F_q, q = p^f = 1 (mod ell).
class FqTable {
 public:
  static constexpr std::uint8_t kZero = 0xFF;

  FqTable(GaloisField field, int ell, u64 generator, std::vector<std::uint8_t> index)
      : field_(std::move(field)), ell_(ell), generator_(generator), index_(std::move(index)) {}

  u64 p() const { return field_.p(); }
  int f() const { return field_.degree(); }
  u64 q() const { return field_.order(); }
  int ell() const { return ell_; }
  u64 generator() const { return generator_; }
  const GaloisField& field() const { return field_; }
  const std::vector<std::uint8_t>& index() const { return index_; }

  // ind(lambda) mod ell, or kZero for lambda = 0.
  std::uint8_t ind(u64 lambda) const { return index_[lambda]; }
  u64 one_minus(u64 lambda) const { return field_.one_minus(lambda); }

 private:
  GaloisField field_;
  int ell_;
  u64 generator_;
  std::vector<std::uint8_t> index_;
};

namespace detail {

inline void check_table_level(int ell) {
  if (ell < 3 || ell >= FqTable::kZero || !is_prime(static_cast<u64>(ell)))
    throw std::invalid_argument("index tables need an odd prime ell < 255");
}

}  // namespace detail

// Pass generator = 0 for the least primitive root.
inline FqTable build_prime_field_table(u64 p, int ell, u64 generator = 0, u64 cap = kDefaultTableCap) {
  detail::check_table_level(ell);
  if (p == static_cast<u64>(ell)) throw RamifiedPrime(p);
  if (!is_prime(p)) throw std::invalid_argument("build_prime_field_table: p must be prime");
  if (p % static_cast<u64>(ell) != 1)
    throw std::invalid_argument("no character of order " + std::to_string(ell) + " on F_" +
                                std::to_string(p) + " (p != 1 mod ell)");
  if (p > cap) throw TableCapExceeded(p, cap);
  const u64 g = generator == 0 ? primitive_root(p) : generator;
  if (multiplicative_order(g % p, p) != p - 1)
    throw std::invalid_argument("build_prime_field_table: generator has wrong order");

  std::vector<std::uint8_t> index(p);
  index[0] = FqTable::kZero;
  const Barrett32 red(p);
  const u64 ellu = static_cast<u64>(ell);
  u64 x = 1;
  std::uint8_t j = 0;
  for (u64 n = 0; n + 1 < p; ++n) {
    index[x] = j;
    j = static_cast<std::uint8_t>(j + 1u == ellu ? 0 : j + 1);
    x = red.reduce(x * g);
  }
  g_table_builds.fetch_add(1, std::memory_order_relaxed);
  return FqTable(GaloisField(p, 1), ell, g, std::move(index));
}

inline FqTable build_extension_field_table(u64 p, int f, int ell, u64 cap = kDefaultTableCap) {
  detail::check_table_level(ell);
  if (p == static_cast<u64>(ell)) throw RamifiedPrime(p);
  const int expected = residue_degree(p, static_cast<u64>(ell));
  if (f != expected)
    throw std::invalid_argument("build_extension_field_table: f = " + std::to_string(f) +
                                " but the residue degree of " + std::to_string(p) + " is " +
                                std::to_string(expected));
  if (f == 1) return build_prime_field_table(p, ell, 0, cap);
  const u64 q = saturating_power(p, f);
  if (q > cap) throw TableCapExceeded(q, cap);

  GaloisField field(p, f);
  const u64 g = field.canonical_generator();
  std::vector<std::uint8_t> index(q);
  index[0] = FqTable::kZero;
  u64 x = 1;
  for (u64 n = 0; n + 1 < q; ++n) {
    index[x] = static_cast<std::uint8_t>(n % static_cast<u64>(ell));
    x = field.mul(x, g);
  }
  g_table_builds.fetch_add(1, std::memory_order_relaxed);
  return FqTable(std::move(field), ell, g, std::move(index));
}

inline FqTable build_field_table(u64 p, int ell, u64 cap = kDefaultTableCap) {
  const int f = residue_degree(p, static_cast<u64>(ell));
  return f == 1 ? build_prime_field_table(p, ell, 0, cap) : build_extension_field_table(p, f, ell, cap);
}

}  // namespace fbias
