#pragma once

// Exact arithmetic in Z[zeta_ell] on the power basis 1, zeta, ..., zeta^(ell-2).

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace fbias {

using BigInt = boost::multiprecision::cpp_int;

// An element t of (Z/ell)^*, acting on Q(mu_ell) by zeta -> zeta^t.
class GaloisElement {
 public:
  GaloisElement(int ell, long long t) : ell_(ell) {
    long long r = ((t % ell) + ell) % ell;
    if (r == 0) throw std::invalid_argument("Galois element t must be a unit mod ell");
    t_ = static_cast<int>(r);
  }
  int ell() const { return ell_; }
  int t() const { return t_; }
  GaloisElement compose(const GaloisElement& other) const {
    return GaloisElement(ell_, static_cast<long long>(t_) * other.t_);
  }
  GaloisElement inverse() const {
    for (int s = 1; s < ell_; ++s) {
      if (static_cast<long long>(s) * t_ % ell_ == 1) return GaloisElement(ell_, s);
    }
    throw std::logic_error("no inverse mod ell");
  }

 private:
  int ell_;
  int t_ = 1;
};

class CycInt {
 public:
  CycInt() = default;

  // Zero of Z[zeta_ell].
  explicit CycInt(int ell) : ell_(ell), coeffs_(static_cast<std::size_t>(ell - 1)) {
    check_level(ell);
  }

  // Accepts either ell-1 power-basis coefficients or ell redundant coefficients
  // (on 1, zeta, ..., zeta^(ell-1)), which are reduced.
  CycInt(int ell, std::vector<BigInt> coeffs) : ell_(ell) {
    check_level(ell);
    const auto n = static_cast<std::size_t>(ell);
    if (coeffs.size() == n) {
      reduce_top(coeffs);
    } else if (coeffs.size() != n - 1) {
      throw std::invalid_argument("CycInt needs ell-1 or ell coefficients");
    }
    coeffs_ = std::move(coeffs);
  }

  CycInt(int ell, std::initializer_list<long long> coeffs)
      : CycInt(ell, std::vector<BigInt>(coeffs.begin(), coeffs.end())) {}

  static CycInt integer(int ell, const BigInt& value) {
    CycInt r(ell);
    r.coeffs_[0] = value;
    return r;
  }

  static CycInt zeta_power(int ell, long long j) {
    std::vector<BigInt> full(static_cast<std::size_t>(ell));
    full[static_cast<std::size_t>(((j % ell) + ell) % ell)] = 1;
    return CycInt(ell, std::move(full));
  }

  // From counts on the redundant basis zeta^0..zeta^(ell-1).
  template <typename Int>
  static CycInt from_full(int ell, std::span<const Int> full) {
    std::vector<BigInt> v(full.begin(), full.end());
    return CycInt(ell, std::move(v));
  }

  int ell() const { return ell_; }
  const std::vector<BigInt>& coeffs() const { return coeffs_; }

  bool is_zero() const {
    for (const auto& c : coeffs_)
      if (c != 0) return false;
    return true;
  }

  bool is_rational() const {
    for (std::size_t j = 1; j < coeffs_.size(); ++j)
      if (coeffs_[j] != 0) return false;
    return true;
  }

  const BigInt& rational_value() const {
    if (!is_rational()) throw std::domain_error("CycInt is not a rational integer");
    return coeffs_[0];
  }

  friend bool operator==(const CycInt& a, const CycInt& b) {
    return a.ell_ == b.ell_ && a.coeffs_ == b.coeffs_;
  }

  CycInt& operator+=(const CycInt& o) {
    same_level(o);
    for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffs_[j] += o.coeffs_[j];
    return *this;
  }
  CycInt& operator-=(const CycInt& o) {
    same_level(o);
    for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffs_[j] -= o.coeffs_[j];
    return *this;
  }
  friend CycInt operator+(CycInt a, const CycInt& b) { return a += b; }
  friend CycInt operator-(CycInt a, const CycInt& b) { return a -= b; }
  friend CycInt operator-(CycInt a) {
    for (auto& c : a.coeffs_) c = -c;
    return a;
  }
  friend CycInt operator*(const CycInt& a, const CycInt& b);
  CycInt& operator*=(const CycInt& o) { return *this = *this * o; }

  friend std::ostream& operator<<(std::ostream& os, const CycInt& a) {
    os << '[';
    for (std::size_t j = 0; j < a.coeffs_.size(); ++j) os << (j ? "," : "") << a.coeffs_[j];
    return os << ']';
  }

 private:
  static void check_level(int ell) {
    if (ell < 3) throw std::invalid_argument("CycInt level must be an odd prime >= 3");
  }

  void same_level(const CycInt& o) const {
    if (o.ell_ != ell_) throw std::invalid_argument("CycInt level mismatch");
  }

  // zeta^(ell-1) = -(1 + zeta + ... + zeta^(ell-2))
  static void reduce_top(std::vector<BigInt>& full) {
    const BigInt top = full.back();
    full.pop_back();
    if (top != 0)
      for (auto& c : full) c -= top;
  }

  int ell_ = 0;
  std::vector<BigInt> coeffs_;
};

inline CycInt cyc_mul(const CycInt& a, const CycInt& b) {
  if (a.ell() != b.ell()) throw std::invalid_argument("cyc_mul: mismatched ell");
  const auto n = static_cast<std::size_t>(a.ell());
  std::vector<BigInt> full(n);
  const auto& x = a.coeffs();
  const auto& y = b.coeffs();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0) continue;
    for (std::size_t j = 0; j < y.size(); ++j) full[(i + j) % n] += x[i] * y[j];
  }
  return CycInt(a.ell(), std::move(full));
}

inline CycInt operator*(const CycInt& a, const CycInt& b) { return cyc_mul(a, b); }

// sigma_t: zeta^j -> zeta^(t j).
inline CycInt galois_apply(const GaloisElement& t, const CycInt& a) {
  if (t.ell() != a.ell()) throw std::invalid_argument("galois_apply: mismatched ell");
  const auto n = static_cast<std::size_t>(a.ell());
  std::vector<BigInt> full(n);
  const auto& x = a.coeffs();
  for (std::size_t j = 0; j < x.size(); ++j)
    full[(j * static_cast<std::size_t>(t.t())) % n] = x[j];
  return CycInt(a.ell(), std::move(full));
}

inline CycInt complex_conjugate(const CycInt& a) {
  return galois_apply(GaloisElement(a.ell(), a.ell() - 1), a);
}

// a times its complex conjugate; equals q exactly for a Jacobi sum over F_q.
inline CycInt abs_square(const CycInt& a) { return cyc_mul(a, complex_conjugate(a)); }

inline CycInt cyc_pow(const CycInt& a, unsigned e) {
  CycInt result = CycInt::integer(a.ell(), 1);
  CycInt base = a;
  while (e > 0) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return result;
}

// Complex embedding zeta -> exp(2 pi i t / ell).
inline std::complex<double> embed(const CycInt& a, const GaloisElement& t) {
  const int ell = a.ell();
  std::complex<double> sum{0.0, 0.0};
  const auto& x = a.coeffs();
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] == 0) continue;
    const long long e = static_cast<long long>(j) * t.t() % ell;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(e) / ell;
    sum += static_cast<double>(x[j]) * std::complex<double>(std::cos(angle), std::sin(angle));
  }
  return sum;
}

inline std::complex<double> embed(const CycInt& a) { return embed(a, GaloisElement(a.ell(), 1)); }

inline nlohmann::json cyc_to_json(const CycInt& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : a.coeffs()) arr.push_back(c.str());
  return arr;
}

inline CycInt cyc_from_json(int ell, const nlohmann::json& arr) {
  if (!arr.is_array()) throw std::invalid_argument("CycInt JSON must be an array");
  std::vector<BigInt> coeffs;
  for (const auto& item : arr) {
    if (!item.is_string()) throw std::invalid_argument("CycInt coefficient must be a decimal string");
    const auto s = item.get<std::string>();
    if (s.empty() || s.find_first_not_of("-0123456789") != std::string::npos ||
        s.find('-', 1) != std::string::npos || s == "-") {
      throw std::invalid_argument("bad CycInt coefficient '" + s + "'");
    }
    coeffs.emplace_back(s);
  }
  if (coeffs.size() != static_cast<std::size_t>(ell - 1))
    throw std::invalid_argument("CycInt JSON has wrong length for ell");
  return CycInt(ell, std::move(coeffs));
}

}  // namespace fbias
