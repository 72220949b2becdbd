#pragma once

// Partial Euler products, Chebyshev-bias sums and their I/II/III decomposition,
// second-moment sums and log log x regression.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbias/arith.hpp"
#include "fbias/curves.hpp"
#include "fbias/cyclotomic.hpp"
#include "fbias/jacobi.hpp"
#include "fbias/jacobi_scan.hpp"

namespace fbias {

using Complex = std::complex<double>;

// Diagonal unitary matrix M(P) with entries psi_(kt,t)(P) = J_(kt,t)(P)/sqrt(q), in
// the curve's pair order. At primes above ell every entry is zero.
struct LocalMatrix {
  PrimeOfF prime;
  std::vector<Complex> entries;

  bool is_zero() const {
    for (const auto& e : entries)
      if (e != Complex{}) return false;
    return true;
  }

  Complex trace_power(int n) const {
    Complex s{};
    for (const auto& e : entries) s += std::pow(e, n);
    return s;
  }

  // det(1 - M z)
  Complex det_one_minus(Complex z) const {
    Complex d{1.0, 0.0};
    for (const auto& e : entries) d *= 1.0 - e * z;
    return d;
  }
};

inline LocalMatrix local_matrix(const JacobiAtP& data, const PrimeOfF& prime, const CurveId& curve) {
  LocalMatrix m{prime, {}};
  const double root_q = std::sqrt(static_cast<double>(data.q));
  for (auto [k1, k2] : curve.pairs()) m.entries.push_back(embed(data.value(prime, k1, k2)) / root_q);
  return m;
}

inline LocalMatrix local_matrix_at_ell(const CurveId& curve) {
  const auto ell = static_cast<u64>(curve.ell);
  return LocalMatrix{PrimeOfF{ell, 1, 1, ell}, std::vector<Complex>(curve.pairs().size())};
}

struct SeriesSample {
  u64 x = 0;
  double value = 0.0;
};

// What an Euler product runs over: a curve over F, or one character psi_(kt,t).
struct EulerTarget {
  enum class Kind { Curve, Character };
  Kind kind = Kind::Curve;
  CurveId curve;
  int k = 1;
  int t = 1;

  static EulerTarget of(const CurveId& c) { return EulerTarget{Kind::Curve, c, 0, 0}; }
  static EulerTarget character(int ell, int k, int t) {
    if (k < 1 || k > ell - 2 || t < 1 || t > ell - 1) throw std::invalid_argument("character index out of range");
    return EulerTarget{Kind::Character, CurveId::fermat(ell), k, t};
  }
};

namespace detail {

// psi values embed(J_(k,1)(P), u)/sqrt(q) for k = 1..ell-2, u = 0..ell-1 (u = 0 unused).
struct NormalizedReps {
  int ell = 0;
  std::vector<Complex> values;

  NormalizedReps(const JacobiAtP& data) : ell(data.ell), values(static_cast<std::size_t>((ell - 2) * ell)) {
    const double root_q = std::sqrt(static_cast<double>(data.q));
    std::vector<Complex> roots(static_cast<std::size_t>(ell));
    for (int j = 0; j < ell; ++j) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / ell;
      roots[static_cast<std::size_t>(j)] = {std::cos(angle), std::sin(angle)};
    }
    std::vector<double> c;
    for (int k = 1; k <= ell - 2; ++k) {
      c.clear();
      for (const auto& x : data.rep(k).coeffs()) c.push_back(static_cast<double>(x));
      for (int u = 1; u < ell; ++u) {
        Complex sum{};
        for (std::size_t j = 0; j < c.size(); ++j)
          if (c[j] != 0.0) sum += c[j] * roots[j * static_cast<std::size_t>(u) % static_cast<std::size_t>(ell)];
        values[static_cast<std::size_t>((k - 1) * ell + u)] = sum / root_q;
      }
    }
  }

  Complex at(int k, long long u) const { return values[static_cast<std::size_t>((k - 1) * ell + mod_ell(u, ell))]; }
};

// Entries of M_curve(sigma_s P): psi_(kt,t)(sigma_s P) = embed(J_(k,1)(P), s t)/sqrt(q).
inline void curve_entries(const NormalizedReps& psi, const CurveId& curve, int s, std::vector<Complex>& out) {
  out.clear();
  const int ell = psi.ell;
  const int k_lo = curve.is_fermat() ? 1 : curve.k;
  const int k_hi = curve.is_fermat() ? ell - 2 : curve.k;
  for (int k = k_lo; k <= k_hi; ++k)
    for (int t = 1; t < ell; ++t) out.push_back(psi.at(k, static_cast<long long>(s) * t));
}

// Neumaier summation; the order of additions is fixed by the caller.
struct CompensatedSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      c += (sum - t) + v;
    else
      c += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

struct CompensatedComplexSum {
  CompensatedSum re, im;
  void add(Complex v) {
    re.add(v.real());
    im.add(v.imag());
  }
  Complex value() const { return {re.value(), im.value()}; }
};

inline void check_grid(const std::vector<u64>& grid, const JacobiScan& scan) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && grid[i] <= grid[i - 1]) throw std::invalid_argument("grid must be strictly increasing");
    if (grid[i] > scan.x_max()) throw std::invalid_argument("grid point beyond the scanned range");
  }
}

}  // namespace detail

// log prod_{q_P <= x} det(1 - M(P) q^-s)^(-1) at each grid point, principal branch per factor.
inline std::vector<Complex> euler_log_series(const JacobiScan& scan, const EulerTarget& target, Complex s,
                                             const std::vector<u64>& grid) {
  detail::check_grid(grid, scan);
  std::vector<Complex> out;
  detail::CompensatedComplexSum acc;
  std::vector<Complex> entries;
  const auto primes = scan.by_norm();
  std::size_t next = 0;
  for (u64 x : grid) {
    for (; next < primes.size() && primes[next]->q <= x; ++next) {
      const JacobiAtP& d = *primes[next];
      const Complex qs = std::pow(static_cast<double>(d.q), -s);
      const double root_q = std::sqrt(static_cast<double>(d.q));
      std::optional<detail::NormalizedReps> psi;
      if (target.kind == EulerTarget::Kind::Curve) psi.emplace(d);
      for (const auto& prime : d.primes()) {
        if (target.kind == EulerTarget::Kind::Curve) {
          detail::curve_entries(*psi, target.curve, prime.t, entries);
        } else {
          const int k1 = mod_ell(static_cast<long long>(target.k) * target.t, scan.ell());
          entries.assign(1, embed(d.value(prime, k1, target.t)) / root_q);
        }
        for (const auto& e : entries) {
          const Complex factor = 1.0 - e * qs;
          if (std::abs(factor) < 1e-14)
            throw std::domain_error("local factor vanishes at the prime above p=" + std::to_string(d.p) +
                                    " with twist " + std::to_string(prime.t));
          acc.add(-std::log(factor));
        }
      }
    }
    out.push_back(acc.value());
  }
  return out;
}

// (log x)^m prod_{q_P <= x} det(1 - M(P) q^-s)^(-1).
inline Complex partial_euler_product(const JacobiScan& scan, const EulerTarget& target, Complex s, u64 x, int m = 0) {
  const Complex log_product = euler_log_series(scan, target, s, {x}).front();
  const double norm = m == 0 ? 1.0 : std::pow(std::log(static_cast<double>(x)), m);
  return norm * std::exp(log_product);
}

// sum_{p <= x} a_p / p; only p = 1 (mod ell) contribute.
inline std::vector<SeriesSample> bias_sum(const JacobiScan& scan, const CurveId& curve, const std::vector<u64>& grid) {
  detail::check_grid(grid, scan);
  std::vector<SeriesSample> out;
  detail::CompensatedSum acc;
  const auto& primes = scan.primes();
  std::size_t next = 0;
  for (u64 x : grid) {
    for (; next < primes.size() && primes[next].p <= x; ++next) {
      const auto& d = primes[next];
      if (d.f != 1) continue;
      acc.add(static_cast<double>(ap_from_jacobi(d, curve)) / static_cast<double>(d.p));
    }
    out.push_back({x, acc.value()});
  }
  return out;
}

struct BiasDecomposition {
  u64 x = 0;
  int m = 0;
  Complex term_I;
  Complex term_II;
  Complex term_III;
  std::map<int, Complex> term_I_f;
  Complex log_euler;          // -sum log det(1 - M q^(-1/2)), computed factor by factor
  double III_tail_bound = 0;  // sum over P of the truncation remainders of the n >= 3 series
  double bound_III_finite = 0;  // 2g sum_{q <= x} q^(-3/2)
  double bound_III = 0;         // finite sum plus an integral tail estimate toward 2g zeta_F(3/2)

  Complex decomposition_total() const { return term_I + term_II + term_III; }
  double identity_error() const { return std::abs(decomposition_total() - log_euler); }
  double loglog() const { return std::log(std::log(static_cast<double>(x))); }
  // log of (log x)^m prod det(1 - M q^(-1/2))^(-1)
  double normalized_log_product() const { return m * loglog() + log_euler.real(); }
};

inline constexpr double kSeriesIncrementFloor = 1e-15;

inline std::vector<BiasDecomposition> bias_decomposition_series(const JacobiScan& scan, const CurveId& curve,
                                                                const std::vector<u64>& grid, int m = 0) {
  detail::check_grid(grid, scan);
  const int g = curve.genus();
  const double dim = 2.0 * g;
  std::vector<BiasDecomposition> out;
  detail::CompensatedComplexSum sum_I, sum_II, sum_III, sum_log;
  std::map<int, detail::CompensatedComplexSum> sum_I_f;
  detail::CompensatedSum tail, bound;
  std::vector<Complex> entries;
  const auto primes = scan.by_norm();
  std::size_t next = 0;
  for (u64 x : grid) {
    for (; next < primes.size() && primes[next]->q <= x; ++next) {
      const JacobiAtP& d = *primes[next];
      const double q = static_cast<double>(d.q);
      const double root_q = std::sqrt(q);
      const detail::NormalizedReps psi(d);
      for (const auto& prime : d.primes()) {
        detail::curve_entries(psi, curve, prime.t, entries);
        Complex tr1{}, tr2{}, log_det{};
        for (const auto& e : entries) {
          tr1 += e;
          tr2 += e * e;
          log_det += std::log(1.0 - e / root_q);
        }
        sum_I.add(tr1 / root_q);
        sum_I_f[d.f].add(tr1 / root_q);
        sum_II.add(tr2 / (2.0 * q));
        sum_log.add(-log_det);
        // sum_{n>=3} Tr(M^n) / (n q^(n/2)), stopped once the largest possible
        // increment 2g q^(-n/2)/n drops below the floor.
        std::vector<Complex> powers(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) powers[i] = entries[i] * entries[i];
        Complex third{};
        double r_n = 1.0 / q;  // q^(-n/2) for n = 2
        for (int n = 3;; ++n) {
          r_n /= root_q;
          const double increment_bound = dim * r_n / n;
          if (increment_bound < kSeriesIncrementFloor) {
            // remaining terms n, n+1, ... bounded geometrically
            tail.add(increment_bound / (1.0 - 1.0 / root_q));
            break;
          }
          Complex trn{};
          for (std::size_t i = 0; i < entries.size(); ++i) {
            powers[i] *= entries[i];
            trn += powers[i];
          }
          third += trn * (r_n / n);
        }
        sum_III.add(third);
        bound.add(dim / (q * root_q));
      }
    }
    BiasDecomposition dec;
    dec.x = x;
    dec.m = m;
    dec.term_I = sum_I.value();
    dec.term_II = sum_II.value();
    dec.term_III = sum_III.value();
    for (const auto& [f, s] : sum_I_f) dec.term_I_f[f] = s.value();
    dec.log_euler = sum_log.value();
    dec.III_tail_bound = tail.value();
    dec.bound_III_finite = bound.value();
    // Prime ideals of norm <= y number at most (ell-1) pi(y) < 1.26 (ell-1) y / log y.
    const double xd = static_cast<double>(std::max<u64>(x, 3));
    dec.bound_III = dec.bound_III_finite + dim * (scan.ell() - 1) * 1.26 * 2.0 / (std::sqrt(xd) * std::log(xd));
    out.push_back(std::move(dec));
  }
  return out;
}

inline BiasDecomposition bias_decomposition(const JacobiScan& scan, const CurveId& curve, u64 x, int m = 0) {
  return bias_decomposition_series(scan, curve, {x}, m).front();
}

// sum_{q_P <= x} Tr(M(P)^2)/q over the primes of F.
inline std::vector<SeriesSample> second_moment_over_F(const JacobiScan& scan, const CurveId& curve,
                                                      const std::vector<u64>& grid) {
  detail::check_grid(grid, scan);
  std::vector<SeriesSample> out;
  detail::CompensatedSum acc;
  std::vector<Complex> entries;
  const auto primes = scan.by_norm();
  std::size_t next = 0;
  for (u64 x : grid) {
    for (; next < primes.size() && primes[next]->q <= x; ++next) {
      const JacobiAtP& d = *primes[next];
      const detail::NormalizedReps psi(d);
      for (const auto& prime : d.primes()) {
        detail::curve_entries(psi, curve, prime.t, entries);
        Complex tr2{};
        for (const auto& e : entries) tr2 += e * e;
        acc.add(tr2.real() / static_cast<double>(d.q));
      }
    }
    out.push_back({x, acc.value()});
  }
  return out;
}

// Tr(M(p)^2) over Q, M(p) having the Frobenius eigenvalues alpha/sqrt(p). Each orbit O
// contributes the f-th roots of J_O, whose squares sum to J_O^2 (f = 1), 2 J_O (f = 2)
// or 0 (f > 2). The orbit members share J_O, so summing psi^2 resp. psi over the
// curve's pairs at the canonical prime gives the same total. f > 2 also covers primes
// whose Jacobi sums were never computed.
inline double trace_square_over_Q(const JacobiAtP& d, const CurveId& curve) {
  if (d.f > 2) return 0.0;
  std::vector<Complex> entries;
  detail::curve_entries(detail::NormalizedReps(d), curve, 1, entries);
  double tr = 0.0;
  for (const auto& e : entries) tr += d.f == 1 ? (e * e).real() : e.real();
  return tr;
}

// sum_{p <= x} Tr(M(p)^2)/p over the rational primes.
inline std::vector<SeriesSample> second_moment_over_Q(const JacobiScan& scan, const CurveId& curve,
                                                      const std::vector<u64>& grid) {
  detail::check_grid(grid, scan);
  std::vector<SeriesSample> out;
  detail::CompensatedSum acc;
  const auto& primes = scan.primes();
  std::size_t next = 0;
  for (u64 x : grid) {
    for (; next < primes.size() && primes[next].p <= x; ++next) {
      const auto& d = primes[next];
      acc.add(trace_square_over_Q(d, curve) / static_cast<double>(d.p));
    }
    out.push_back({x, acc.value()});
  }
  return out;
}

// sum_{q_P <= x} J_(k,1)(P)^2 / q^2 over all primes P of F (complex).
inline std::vector<Complex> character_square_sums(const JacobiScan& scan, int k, const std::vector<u64>& grid) {
  detail::check_grid(grid, scan);
  std::vector<Complex> out;
  detail::CompensatedComplexSum acc;
  const auto primes = scan.by_norm();
  std::size_t next = 0;
  for (u64 x : grid) {
    for (; next < primes.size() && primes[next]->q <= x; ++next) {
      const JacobiAtP& d = *primes[next];
      const double q = static_cast<double>(d.q);
      for (const auto& prime : d.primes()) {
        const Complex j = embed(d.value(prime, k, 1));
        acc.add(j * j / (q * q));
      }
    }
    out.push_back(acc.value());
  }
  return out;
}

struct SettlingReport {
  double top_decade_fluctuation = 0;
  double lower_decade_fluctuation = 0;
  bool settling() const { return top_decade_fluctuation <= lower_decade_fluctuation; }
};

// Largest distance between two samples within the top decade, and within the decade below.
inline SettlingReport settling_report(const std::vector<u64>& grid, const std::vector<Complex>& values) {
  SettlingReport r;
  if (grid.empty()) return r;
  const double top = std::log10(static_cast<double>(grid.back()));
  auto spread = [&](double lo, double hi) {
    double best = 0.0;
    std::vector<Complex> in;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double e = std::log10(static_cast<double>(grid[i]));
      if (e >= lo - 1e-12 && e <= hi + 1e-12) in.push_back(values[i]);
    }
    for (std::size_t i = 0; i < in.size(); ++i)
      for (std::size_t j = i + 1; j < in.size(); ++j) best = std::max(best, std::abs(in[i] - in[j]));
    return best;
  };
  r.top_decade_fluctuation = spread(top - 1.0, top);
  r.lower_decade_fluctuation = spread(top - 2.0, top - 1.0);
  return r;
}

struct RegressionFit {
  double slope = 0;
  double intercept = 0;
  double residual_rms = 0;
  u64 x_lo = 0;
  u64 x_hi = 0;
  std::size_t samples = 0;
};

// Ordinary least squares of y against log log x over samples with x in [x_lo, x_hi].
inline RegressionFit loglog_fit(const std::vector<SeriesSample>& samples, u64 x_lo, u64 x_hi) {
  std::vector<double> xs, ys;
  for (const auto& s : samples) {
    if (s.x < x_lo || s.x > x_hi || s.x < 3) continue;
    xs.push_back(std::log(std::log(static_cast<double>(s.x))));
    ys.push_back(s.value);
  }
  if (xs.size() < 3) throw std::invalid_argument("loglog_fit needs at least 3 samples with x >= 3 in the window");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 1e-300) throw std::invalid_argument("loglog_fit: degenerate design (all log log x equal)");
  RegressionFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  fit.x_lo = x_lo;
  fit.x_hi = x_hi;
  fit.samples = xs.size();
  return fit;
}

// Orders of vanishing assumed at s = 1/2 (over F: m, m_k; over Q: m0, mk0) and
// delta = -ord_{s=1} of the second-moment L-function.
struct AnalyticParams {
  int m = 0;
  std::map<int, int> m_k;
  std::optional<int> m0;
  std::map<int, int> mk0;
  std::optional<int> delta;

  int order_for(const CurveId& curve) const {
    if (curve.is_fermat()) return m;
    auto it = m_k.find(curve.k);
    return it == m_k.end() ? 0 : it->second;
  }

  // m = (ell-1) m0, and likewise per quotient, whenever both sides are set.
  void validate(int ell) const {
    if (m0 && m != (ell - 1) * *m0) throw std::invalid_argument("orders over F and Q inconsistent: need m = (ell-1) m0");
    for (const auto& [k, v] : mk0) {
      auto it = m_k.find(k);
      const int over_f = it == m_k.end() ? 0 : it->second;
      if (over_f != (ell - 1) * v)
        throw std::invalid_argument("orders for quotient " + std::to_string(k) + " inconsistent: need m_k = (ell-1) m_k0");
    }
  }
};

// (g - m)/(ell - 1), the log log x coefficient of the bias sum.
inline double predicted_slope(const CurveId& curve, int m) {
  return static_cast<double>(curve.genus() - m) / static_cast<double>(curve.ell - 1);
}

}  // namespace fbias
