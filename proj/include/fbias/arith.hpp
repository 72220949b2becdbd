#pragma once

// Prime enumeration and elementary modular arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbias/error.hpp"

namespace fbias {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

inline u64 powmod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

// Deterministic Miller-Rabin for all 64-bit inputs.
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 small : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % small == 0) return n == small;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    u64 x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

namespace detail {

inline u64 pollard_rho(u64 n) {
  if (n % 2 == 0) return 2;
  for (u64 c = 1;; ++c) {
    auto step = [&](u64 v) { return (mulmod(v, v, n) + c) % n; };
    u64 x = 2, y = 2, d = 1;
    while (d == 1) {
      x = step(x);
      y = step(step(y));
      d = std::gcd(x > y ? x - y : y - x, n);
    }
    if (d != n) return d;
  }
}

inline void factor_into(u64 n, std::vector<u64>& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  u64 d = pollard_rho(n);
  factor_into(d, out);
  factor_into(n / d, out);
}

}  // namespace detail

// Distinct prime factors of n in increasing order. Trial division by small
// primes, Pollard rho for whatever cofactor is left.
inline std::vector<u64> distinct_prime_factors(u64 n) {
  std::vector<u64> factors;
  for (u64 d = 2; d < 1000 && d * d <= n; ++d) {
    if (n % d == 0) {
      factors.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) {
    std::vector<u64> rest;
    detail::factor_into(n, rest);
    factors.insert(factors.end(), rest.begin(), rest.end());
  }
  std::sort(factors.begin(), factors.end());
  factors.erase(std::unique(factors.begin(), factors.end()), factors.end());
  return factors;
}

// Multiplicative order of a modulo the prime p (a not divisible by p).
inline u64 multiplicative_order(u64 a, u64 p) {
  u64 order = p - 1;
  for (u64 r : distinct_prime_factors(p - 1)) {
    while (order % r == 0 && powmod(a, order / r, p) == 1) order /= r;
  }
  return order;
}

// Smallest f > 0 with p^f = 1 (mod ell); this is the residue degree of p in Q(mu_ell).
inline int residue_degree(u64 p, u64 ell) {
  if (p % ell == 0) throw RamifiedPrime(p);
  u64 x = p % ell;
  int f = 1;
  while (x != 1) {
    x = x * (p % ell) % ell;
    ++f;
  }
  return f;
}

// Least primitive root modulo the prime p.
inline u64 primitive_root(u64 p) {
  if (p == 2) return 1;
  const auto factors = distinct_prime_factors(p - 1);
  for (u64 g = 2; g < p; ++g) {
    bool generator = std::all_of(factors.begin(), factors.end(),
                                 [&](u64 r) { return powmod(g, (p - 1) / r, p) != 1; });
    if (generator) return g;
  }
  throw std::invalid_argument("primitive_root: " + std::to_string(p) + " is not prime");
}

// Level data for the Fermat curve of degree ell.
struct LevelConfig {
  int ell = 3;
  int genus_g = 1;   // (ell-1)(ell-2)/2, the Fermat curve
  int genus_gp = 1;  // (ell-1)/2, each quotient curve

  static LevelConfig make(int ell) {
    if (ell < 3 || !is_prime(static_cast<u64>(ell))) {
      throw std::invalid_argument("ell must be an odd prime, got " + std::to_string(ell));
    }
    return LevelConfig{ell, (ell - 1) * (ell - 2) / 2, (ell - 1) / 2};
  }
};

inline constexpr std::size_t kDefaultSegmentSize = std::size_t{1} << 20;

// Segmented sieve of Eratosthenes emitting every prime <= limit once, in order.
// Memory is O(sqrt(limit) + segment size).
class PrimeStream {
 public:
  explicit PrimeStream(u64 limit, std::size_t segment_size = kDefaultSegmentSize)
      : limit_(limit), segment_size_(std::max<std::size_t>(segment_size, 64)) {
    if (limit_ < 2) {
      done_ = true;
      return;
    }
    u64 root = static_cast<u64>(std::sqrt(static_cast<double>(limit_)));
    while (root * root > limit_) --root;
    while ((root + 1) * (root + 1) <= limit_) ++root;
    std::vector<char> small(root + 1, 1);
    for (u64 i = 2; i <= root; ++i) {
      if (!small[i]) continue;
      base_primes_.push_back(i);
      for (u64 j = i * i; j <= root; j += i) small[j] = 0;
    }
    segment_.resize(segment_size_);
    low_ = 0;
    load_segment();
  }

  std::optional<u64> next() {
    while (!done_) {
      while (pos_ < count_) {
        std::size_t i = pos_++;
        if (segment_[i]) return low_ + i;
      }
      low_ += segment_size_;
      if (low_ > limit_) {
        done_ = true;
        break;
      }
      load_segment();
    }
    return std::nullopt;
  }

  u64 limit() const { return limit_; }

  // Current window [low, high] being emitted.
  u64 window_low() const { return low_; }
  u64 window_high() const { return low_ + count_ - 1; }

 private:
  void load_segment() {
    const u64 high = std::min<u64>(low_ + segment_size_ - 1, limit_);
    count_ = static_cast<std::size_t>(high - low_ + 1);
    pos_ = 0;
    std::fill(segment_.begin(), segment_.begin() + count_, 1);
    for (u64 n = low_; n < std::min<u64>(2, high + 1); ++n) segment_[n - low_] = 0;
    for (u64 r : base_primes_) {
      if (r * r > high) break;
      u64 start = std::max(r * r, (low_ + r - 1) / r * r);
      for (u64 j = start; j <= high; j += r) segment_[j - low_] = 0;
    }
  }

  u64 limit_;
  std::size_t segment_size_;
  std::vector<u64> base_primes_;
  std::vector<char> segment_;
  u64 low_ = 0;
  std::size_t count_ = 0;
  std::size_t pos_ = 0;
  bool done_ = false;
};

inline PrimeStream sieve_primes(u64 limit, std::size_t segment_size = kDefaultSegmentSize) {
  return PrimeStream(limit, segment_size);
}

inline std::vector<u64> primes_up_to(u64 limit) {
  std::vector<u64> out;
  PrimeStream stream(limit);
  while (auto p = stream.next()) out.push_back(*p);
  return out;
}

// Barrett reduction for moduli below 2^32; used by the table-building loops.
class Barrett32 {
 public:
  explicit Barrett32(u64 m) : m_(m), inv_(m > 1 ? ~u64{0} / m : 0) {}
  u64 reduce(u64 x) const {
    u64 q = static_cast<u64>((static_cast<u128>(x) * inv_) >> 64);
    u64 r = x - q * m_;
    return r >= m_ ? r - m_ : r;
  }
  u64 modulus() const { return m_; }

 private:
  u64 m_;
  u64 inv_;
};

}  // namespace fbias
