#pragma once

// The `bias` command line: compute, verify, fit, export.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fbias/arith.hpp"
#include "fbias/curves.hpp"
#include "fbias/error.hpp"
#include "fbias/fields.hpp"
#include "fbias/jacobi.hpp"
#include "fbias/jacobi_scan.hpp"
#include "fbias/lfunc.hpp"

namespace fbias::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInvariantFailure = 2, kResourceCap = 3 };

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  int ell = 3;
  std::string curve = "all";  // all | fermat | quotient
  int k = 0;                  // with curve = quotient; 0 means every k
  u64 x_max = 100000;
  std::string grid = "geometric";
  std::string m = "0";
  unsigned threads = 0;  // 0: hardware concurrency
  std::string cache;
  u64 oracle_cap = kDefaultOracleCap;
  u64 table_cap = kDefaultTableCap;
  std::string out = ".";
  bool no_header_timestamp = false;
  u64 fit_lo = 1000;
  u64 fit_hi = 0;  // 0: x_max

  unsigned worker_count() const {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

inline void validate(const RunConfig& cfg) {
  if (cfg.ell < 3 || !is_prime(static_cast<u64>(cfg.ell)) || cfg.ell >= 255)
    throw UsageError("--ell must be an odd prime below 255, got " + std::to_string(cfg.ell));
  if (cfg.x_max < 100) throw UsageError("--x-max must be at least 100");
  if (cfg.curve != "all" && cfg.curve != "fermat" && cfg.curve != "quotient")
    throw UsageError("--curve must be one of all, fermat, quotient");
  if (cfg.k != 0 && (cfg.k < 1 || cfg.k > cfg.ell - 2))
    throw UsageError("--k must lie in [1, " + std::to_string(cfg.ell - 2) + "]");
  if (cfg.k != 0 && cfg.curve != "quotient") throw UsageError("--k needs --curve quotient");
}

inline std::vector<CurveId> selected_curves(const RunConfig& cfg) {
  if (cfg.curve == "fermat") return {CurveId::fermat(cfg.ell)};
  if (cfg.curve == "quotient") {
    if (cfg.k != 0) return {CurveId::quotient(cfg.ell, cfg.k)};
    std::vector<CurveId> out;
    for (int k = 1; k <= cfg.ell - 2; ++k) out.push_back(CurveId::quotient(cfg.ell, k));
    return out;
  }
  return all_curves(cfg.ell);
}

// "geometric" (four points per decade), "geometric:N" (N per decade), or an
// explicit comma-separated list. Geometric grids take floor(10^(j/N)) from 3 up
// and always end at x_max.
inline std::vector<u64> make_grid(const std::string& text, u64 x_max) {
  std::vector<u64> grid;
  if (text.rfind("geometric", 0) == 0) {
    int per_decade = 4;
    if (text.size() > 9) {
      if (text[9] != ':') throw UsageError("bad grid '" + text + "'");
      try {
        per_decade = std::stoi(text.substr(10));
      } catch (const std::exception&) {
        throw UsageError("bad grid '" + text + "'");
      }
      if (per_decade < 1 || per_decade > 1000) throw UsageError("grid points per decade must be in [1, 1000]");
    }
    for (int j = 0;; ++j) {
      const auto x = static_cast<u64>(std::floor(std::pow(10.0, static_cast<double>(j) / per_decade) + 1e-9));
      if (x > x_max) break;
      if (x < 3 || (!grid.empty() && x <= grid.back())) continue;
      grid.push_back(x);
    }
    if (grid.empty() || grid.back() != x_max) grid.push_back(x_max);
    return grid;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    u64 x = 0;
    try {
      std::size_t used = 0;
      x = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad grid value '" + item + "'");
    }
    if (x < 2 || x > x_max) throw UsageError("grid values must lie in [2, x_max]");
    if (!grid.empty() && x <= grid.back()) throw UsageError("grid values must be strictly increasing");
    grid.push_back(x);
  }
  if (grid.empty()) throw UsageError("empty grid");
  return grid;
}

// "N" sets every curve; "fermat=1,k2=0" (or quotient-2=0) sets curves individually.
inline AnalyticParams parse_orders(const std::string& text, int ell) {
  AnalyticParams params;
  auto parse_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size() || v < 0) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("bad order '" + s + "' in --m");
    }
  };
  if (text.find('=') == std::string::npos) {
    const int v = parse_int(text);
    params.m = v;
    for (int k = 1; k <= ell - 2; ++k) params.m_k[k] = v;
    return params;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("bad --m entry '" + item + "'");
    const std::string key = item.substr(0, eq);
    const int v = parse_int(item.substr(eq + 1));
    if (key == "fermat") {
      params.m = v;
      continue;
    }
    std::string digits;
    if (key.rfind("quotient-", 0) == 0)
      digits = key.substr(9);
    else if (key.size() > 1 && key[0] == 'k')
      digits = key.substr(1);
    else
      throw UsageError("unknown curve '" + key + "' in --m");
    const int k = parse_int(digits);
    if (k < 1 || k > ell - 2) throw UsageError("quotient index out of range in --m: " + key);
    params.m_k[k] = v;
  }
  return params;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string series_filename(const CurveId& c) {
  return "series_l" + std::to_string(c.ell) + "_" + c.name() + ".csv";
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline const char* kSeriesColumns =
    "x,bias_sum,term_I,term_II,term_III,log_euler_product_s_half,second_moment_F,second_moment_Q,"
    "predicted_slope,fit_A,fit_c";

struct CurveSeries {
  CurveId curve;
  int m = 0;
  std::vector<SeriesSample> bias;
  std::vector<BiasDecomposition> decomposition;
  std::vector<SeriesSample> moment_F;
  std::vector<SeriesSample> moment_Q;
  std::optional<RegressionFit> fit;
};

// Fit over [lo, hi]; when that holds fewer than 3 usable samples, over every sample with x >= 3.
inline std::optional<RegressionFit> fit_window(const std::vector<SeriesSample>& samples, u64 lo, u64 hi) {
  try {
    return loglog_fit(samples, lo, hi);
  } catch (const std::invalid_argument&) {
  }
  try {
    return loglog_fit(samples, 0, ~u64{0});
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

inline CurveSeries compute_series(const JacobiScan& scan, const CurveId& curve, const std::vector<u64>& grid,
                                  const AnalyticParams& params, u64 fit_lo, u64 fit_hi) {
  CurveSeries s;
  s.curve = curve;
  s.m = params.order_for(curve);
  s.bias = bias_sum(scan, curve, grid);
  s.decomposition = bias_decomposition_series(scan, curve, grid, s.m);
  s.moment_F = second_moment_over_F(scan, curve, grid);
  s.moment_Q = second_moment_over_Q(scan, curve, grid);
  s.fit = fit_window(s.bias, fit_lo, fit_hi);
  return s;
}

inline void write_series_csv(std::ostream& os, const CurveSeries& s, const std::string& header_comment) {
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << kSeriesColumns << '\n';
  const double pred = predicted_slope(s.curve, s.m);
  const double A = s.fit ? s.fit->slope : std::nan("");
  const double c = s.fit ? s.fit->intercept : std::nan("");
  for (std::size_t i = 0; i < s.bias.size(); ++i) {
    const auto& d = s.decomposition[i];
    os << s.bias[i].x << ',' << format_double(s.bias[i].value) << ',' << format_double(d.term_I.real()) << ','
       << format_double(d.term_II.real()) << ',' << format_double(d.term_III.real()) << ','
       << format_double(d.normalized_log_product()) << ',' << format_double(s.moment_F[i].value) << ','
       << format_double(s.moment_Q[i].value) << ',' << format_double(pred) << ',' << format_double(A) << ','
       << format_double(c) << '\n';
  }
}

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
};

inline JacobiScan build_scan(const RunConfig& cfg, std::unique_ptr<JacobiCache>& cache, std::ostream& err) {
  if (!cfg.cache.empty()) cache = std::make_unique<JacobiCache>(cfg.cache, &err);
  ScanOptions opts;
  opts.table_cap = cfg.table_cap;
  opts.threads = cfg.worker_count();
  opts.cache = cache.get();
  return JacobiScan::build(cfg.ell, cfg.x_max, opts);
}

inline int cmd_compute(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto grid = make_grid(cfg.grid, cfg.x_max);
  const auto params = parse_orders(cfg.m, cfg.ell);
  std::unique_ptr<JacobiCache> cache;
  const auto scan = build_scan(cfg, cache, ctx.err);
  std::filesystem::create_directories(cfg.out);
  const u64 fit_hi = cfg.fit_hi == 0 ? cfg.x_max : cfg.fit_hi;
  for (const auto& curve : selected_curves(cfg)) {
    const auto s = compute_series(scan, curve, grid, params, cfg.fit_lo, fit_hi);
    const auto path = std::filesystem::path(cfg.out) / series_filename(curve);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    std::string header;
    if (!cfg.no_header_timestamp)
      header = "bias compute l=" + std::to_string(cfg.ell) + " curve=" + curve.name() +
               " x_max=" + std::to_string(cfg.x_max) + " m=" + std::to_string(s.m) + " generated " + utc_timestamp();
    write_series_csv(os, s, header);
    ctx.out << "wrote " << path.string() << " (" << grid.size() << " rows)\n";
  }
  const auto& st = scan.stats();
  ctx.out << "primes: " << scan.primes().size() << ", tables built: " << st.computed
          << ", cache hits: " << st.cache_hits << ", closed form: " << st.closed_form << '\n';
  return kOk;
}

// ---- verify ----

struct FamilyResult {
  std::string name;
  std::size_t checks = 0;
  std::vector<std::string> witnesses;  // empty when the family passed
  std::size_t skipped = 0;
};

class Verifier {
 public:
  explicit Verifier(std::ostream& out) : out_(out) {}

  // body returns the number of checks; fail() records witnesses.
  void family(const std::string& name, const std::function<std::size_t(FamilyResult&)>& body) {
    FamilyResult r;
    r.name = name;
    try {
      r.checks = body(r);
    } catch (const TableCapExceeded&) {
      throw;
    } catch (const std::exception& e) {
      r.witnesses.push_back(std::string("exception: ") + e.what());
    }
    if (r.witnesses.empty()) {
      out_ << "PASS " << name << " (" << r.checks << " checks";
      if (r.skipped) out_ << ", " << r.skipped << " skipped";
      out_ << ")\n";
    } else {
      failed_ = true;
      out_ << "FAIL " << name << " (" << r.witnesses.size() << " failures)\n";
      const std::size_t shown = std::min<std::size_t>(r.witnesses.size(), 10);
      for (std::size_t i = 0; i < shown; ++i) out_ << "  witness: " << r.witnesses[i] << '\n';
      if (r.witnesses.size() > shown) out_ << "  ... " << r.witnesses.size() - shown << " more\n";
    }
  }

  bool failed() const { return failed_; }

 private:
  std::ostream& out_;
  bool failed_ = false;
};

inline std::string show(const CycInt& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline int cmd_verify(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const int ell = cfg.ell;
  const auto grid = make_grid(cfg.grid, cfg.x_max);
  const auto params = parse_orders(cfg.m, ell);
  const auto curves = selected_curves(cfg);
  std::unique_ptr<JacobiCache> cache;
  const auto scan = build_scan(cfg, cache, ctx.err);
  Verifier v(ctx.out);
  ctx.out << "verify l=" << ell << " p<=" << cfg.x_max << '\n';

  v.family("norm |J|^2 = q", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (const auto& d : scan.primes()) {
      if (!d.has_values()) continue;
      const auto q = CycInt::integer(ell, BigInt(d.q));
      for (const auto& e : d.all_values()) {
        ++n;
        if (abs_square(e.value) != q)
          r.witnesses.push_back("p=" + std::to_string(d.p) + " t=" + std::to_string(e.prime.t) + " (k1,k2)=(" +
                                std::to_string(e.k1) + "," + std::to_string(e.k2) + ") J=" + show(e.value) +
                                " |J|^2=" + show(abs_square(e.value)) + " q=" + std::to_string(d.q));
      }
    }
    return n;
  });

  v.family("Galois equivariance", [&](FamilyResult& r) {
    std::size_t n = 0;
    const u64 limit = std::min<u64>(cfg.x_max, 2000);
    for (const auto& d : scan.primes()) {
      if (d.p > limit || !d.has_values() || d.f % 2 == 0) continue;
      const auto table = build_field_table(d.p, ell, cfg.table_cap);
      for (auto [k1, k2] : IndexSet(ell).pairs()) {
        const auto base = jacobi_sum(table, k1, k2);
        ++n;
        if (d.value(1, k1, k2) != base)
          r.witnesses.push_back("p=" + std::to_string(d.p) + " (k1,k2)=(" + std::to_string(k1) + "," +
                                std::to_string(k2) + ") stored=" + show(d.value(1, k1, k2)) + " table=" + show(base));
        for (int s = 2; s < ell; ++s) {
          ++n;
          const auto lhs = jacobi_sum(table, mod_ell(static_cast<long long>(k1) * s, ell), mod_ell(static_cast<long long>(k2) * s, ell));
          if (lhs != galois_apply(GaloisElement(ell, s), base))
            r.witnesses.push_back("p=" + std::to_string(d.p) + " (k1,k2)=(" + std::to_string(k1) + "," +
                                  std::to_string(k2) + ") s=" + std::to_string(s));
        }
      }
    }
    return n;
  });

  v.family("even residue degree: J = -sqrt(q)", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (const auto& d : scan.primes()) {
      if (d.f % 2 != 0) continue;
      const auto expected = even_degree_reps(d.p, d.f, ell);
      if (d.reps != expected) r.witnesses.push_back("p=" + std::to_string(d.p) + " stored value differs from -p^(f/2)");
      ++n;
      if (d.q > std::min<u64>(10000, cfg.table_cap)) {
        ++r.skipped;
        continue;
      }
      const auto table = orbit_rep_sums(build_field_table(d.p, ell, cfg.table_cap));
      ++n;
      if (table != expected)
        r.witnesses.push_back("p=" + std::to_string(d.p) + " f=" + std::to_string(d.f) + " table J=" + show(table.front()));
    }
    return n;
  });

  v.family("split primes: J and J^2 not real", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (const auto& d : scan.primes()) {
      if (d.f != 1) continue;
      for (int k = 1; k <= ell - 2; ++k) {
        const auto& J = d.rep(k);
        const auto J2 = J * J;
        ++n;
        if (J == complex_conjugate(J) || J2 == complex_conjugate(J2))
          r.witnesses.push_back("p=" + std::to_string(d.p) + " k=" + std::to_string(k) + " J=" + show(J));
      }
    }
    return n;
  });

  v.family("a_p from Jacobi sums = p + 1 - #C(F_p)", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (const auto& d : scan.primes()) {
      if (d.p > cfg.oracle_cap) break;
      long long quotient_total = 0;
      for (const auto& c : all_curves(ell)) {
        const long long a = ap_from_jacobi(d, c);
        const u64 count = c.is_fermat() ? count_fermat_bruteforce(d.p, ell, cfg.oracle_cap)
                                        : count_quotient_bruteforce(d.p, ell, c.k, cfg.oracle_cap);
        const long long expected = static_cast<long long>(d.p + 1) - static_cast<long long>(count);
        ++n;
        if (a != expected)
          r.witnesses.push_back("p=" + std::to_string(d.p) + " " + c.name() + " jacobi=" + std::to_string(a) +
                                " brute=" + std::to_string(expected));
        if (!c.is_fermat()) quotient_total += a;
      }
      ++n;
      if (quotient_total != ap_from_jacobi(d, CurveId::fermat(ell)))
        r.witnesses.push_back("p=" + std::to_string(d.p) + " sum over quotients " + std::to_string(quotient_total) +
                              " != a_p(fermat)");
    }
    return n;
  });

  v.family("a_p = 0 for p != 1 mod l", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (const auto& d : scan.primes()) {
      if (d.f == 1) continue;
      for (const auto& c : all_curves(ell)) {
        ++n;
        if (ap_from_jacobi(d, c) != 0) r.witnesses.push_back("p=" + std::to_string(d.p) + " " + c.name());
      }
    }
    return n;
  });

  v.family("p = -1 mod l: Tr M = -2g", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (const auto& d : scan.primes()) {
      if (d.p % static_cast<u64>(ell) != static_cast<u64>(ell - 1)) continue;
      for (const auto& c : all_curves(ell)) {
        ++n;
        const BigInt tr = jacobi_trace(d, c);
        if (tr != BigInt(-2 * c.genus()) * d.p)
          r.witnesses.push_back("p=" + std::to_string(d.p) + " " + c.name() + " trace*sqrt(q)=" + tr.str());
      }
    }
    return n;
  });

  v.family("Weil bound |a_p| <= 2g sqrt(p)", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (const auto& d : scan.primes()) {
      for (const auto& c : curves) {
        const ApRecord rec{d.p, c, ap_from_jacobi(d, c)};
        ++n;
        if (!within_weil_bound(rec))
          r.witnesses.push_back("p=" + std::to_string(d.p) + " " + c.name() + " a_p=" + std::to_string(rec.ap));
      }
    }
    return n;
  });

  v.family("factorization of partial Euler products", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (double s : {0.5, 0.75}) {
      const auto fermat = euler_log_series(scan, EulerTarget::of(CurveId::fermat(ell)), s, grid);
      std::vector<Complex> quot(grid.size()), chars(grid.size());
      for (int k = 1; k <= ell - 2; ++k) {
        const auto q = euler_log_series(scan, EulerTarget::of(CurveId::quotient(ell, k)), s, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) quot[i] += q[i];
        for (int t = 1; t < ell; ++t) {
          const auto c = euler_log_series(scan, EulerTarget::character(ell, k, t), s, grid);
          for (std::size_t i = 0; i < grid.size(); ++i) chars[i] += c[i];
        }
      }
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Complex pf = std::exp(fermat[i]);
        for (const auto& other : {quot[i], chars[i]}) {
          ++n;
          const double rel = std::abs(pf - std::exp(other)) / std::abs(pf);
          if (!(rel <= 1e-10))
            r.witnesses.push_back("s=" + format_double(s) + " x=" + std::to_string(grid[i]) + " relative error " + format_double(rel));
        }
      }
    }
    return n;
  });

  v.family("base change: eigenvalues over Q vs over F", [&](FamilyResult& r) {
    std::size_t n = 0;
    const u64 limit = std::min<u64>(cfg.x_max, 500);
    const u64 cap = std::min<u64>(cfg.table_cap, u64{1} << 22);
    for (u64 p : primes_up_to(limit)) {
      if (p == static_cast<u64>(ell)) continue;
      const int f = residue_degree(p, static_cast<u64>(ell));
      if (f % 2 == 1 && saturating_power(p, f) > cap) {
        ++r.skipped;
        continue;
      }
      const auto data = jacobi_sums_at_p(p, ell, cap);
      for (const auto& c : curves) {
        local_factor_over_Q(data, c).integer_coeffs();
        std::vector<Complex> overQ, overF;
        for (const auto& a : frobenius_eigenvalues_over_Q(data, c))
          for (int i = 0; i < ell - 1; ++i) overQ.push_back(a);
        for (const auto& prime : data.primes()) {
          for (auto [k1, k2] : c.pairs()) {
            const Complex z = embed(data.value(prime, k1, k2));
            const double rad = std::pow(std::abs(z), 1.0 / f);
            for (int j = 0; j < f; ++j) overF.push_back(std::polar(rad, (std::arg(z) + 2 * std::numbers::pi * j) / f));
          }
        }
        std::vector<char> used(overF.size(), 0);
        bool ok = overQ.size() == overF.size();
        for (const auto& a : overQ) {
          if (!ok) break;
          ok = false;
          for (std::size_t j = 0; j < overF.size(); ++j) {
            if (!used[j] && std::abs(a - overF[j]) <= 1e-9 * std::sqrt(static_cast<double>(p))) {
              used[j] = 1;
              ok = true;
              break;
            }
          }
        }
        ++n;
        if (!ok) r.witnesses.push_back("p=" + std::to_string(p) + " " + c.name() + " eigenvalue multisets differ");
      }
    }
    if (ell == 3) {
      const auto d2 = jacobi_sums_at_p(2, 3);
      const auto P = local_factor_over_Q(d2, CurveId::fermat(3)).integer_coeffs();
      n += 3;
      if (P != std::vector<BigInt>{1, 0, 2}) r.witnesses.push_back("P_2(T) over Q is not 1 + 2T^2");
      if (count_fermat_over_field(GaloisField(2, 1), 3) != 3) r.witnesses.push_back("#C(F_2) != 3");
      if (count_fermat_over_field(GaloisField(2, 2), 3) != 9) r.witnesses.push_back("#C(F_4) != 9");
    }
    return n;
  });

  v.family("decomposition -log prod det = I + II + III", [&](FamilyResult& r) {
    std::size_t n = 0;
    for (const auto& c : curves) {
      for (const auto& d : bias_decomposition_series(scan, c, grid, params.order_for(c))) {
        n += 2;
        if (!(d.identity_error() <= 1e-9))
          r.witnesses.push_back(c.name() + " x=" + std::to_string(d.x) + " identity error " + format_double(d.identity_error()));
        if (!(std::abs(d.term_III) < d.bound_III))
          r.witnesses.push_back(c.name() + " x=" + std::to_string(d.x) + " |III|=" + format_double(std::abs(d.term_III)) +
                                " bound=" + format_double(d.bound_III));
      }
    }
    return n;
  });

  if (v.failed()) {
    ctx.out << "verify: FAILED\n";
    return kInvariantFailure;
  }
  ctx.out << "verify: all families passed\n";
  return kOk;
}

// ---- fit ----

inline std::vector<SeriesSample> read_bias_column(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::vector<std::string> header;
  std::vector<SeriesSample> out;
  std::size_t x_col = 0, b_col = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (header.empty()) {
      header = fields;
      auto x_it = std::find(header.begin(), header.end(), "x");
      auto b_it = std::find(header.begin(), header.end(), "bias_sum");
      if (x_it == header.end() || b_it == header.end())
        throw std::runtime_error(path.string() + " lacks the x / bias_sum columns");
      x_col = static_cast<std::size_t>(x_it - header.begin());
      b_col = static_cast<std::size_t>(b_it - header.begin());
      continue;
    }
    if (fields.size() != header.size()) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    out.push_back({std::stoull(fields[x_col]), std::stod(fields[b_col])});
  }
  return out;
}

inline int cmd_fit(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto params = parse_orders(cfg.m, cfg.ell);
  struct Row {
    CurveId curve;
    int m;
    double pred;
    std::optional<RegressionFit> fit;
  };
  std::vector<Row> rows;
  for (const auto& curve : selected_curves(cfg)) {
    const auto path = std::filesystem::path(cfg.out) / series_filename(curve);
    if (!std::filesystem::exists(path))
      throw UsageError("no series for l=" + std::to_string(cfg.ell) + " " + curve.name() + " in " + cfg.out +
                       "; run `bias compute --ell " + std::to_string(cfg.ell) + " --out " + cfg.out + "` first");
    const auto samples = read_bias_column(path);
    const u64 hi = cfg.fit_hi == 0 ? (samples.empty() ? 0 : samples.back().x) : cfg.fit_hi;
    const int m = params.order_for(curve);
    rows.push_back({curve, m, predicted_slope(curve, m), fit_window(samples, cfg.fit_lo, hi)});
  }
  auto& o = ctx.out;
  o << std::left << std::setw(12) << "curve" << std::right << std::setw(4) << "m" << std::setw(12) << "predicted"
    << std::setw(12) << "fit_A" << std::setw(12) << "|A-pred|" << std::setw(12) << "residual" << "  window\n";
  for (const auto& r : rows) {
    o << std::left << std::setw(12) << r.curve.name() << std::right << std::setw(4) << r.m << std::fixed
      << std::setprecision(6) << std::setw(12) << r.pred;
    if (r.fit) {
      o << std::setw(12) << r.fit->slope << std::setw(12) << std::abs(r.fit->slope - r.pred) << std::setw(12)
        << r.fit->residual_rms << "  [" << r.fit->x_lo << ", " << r.fit->x_hi << "] n=" << r.fit->samples << '\n';
    } else {
      o << std::setw(12) << "n/a" << std::setw(12) << "n/a" << std::setw(12) << "n/a" << "  too few samples\n";
    }
    o << std::defaultfloat;
  }
  return kOk;
}

// ---- export ----

inline int cmd_export(Context& ctx) {
  const auto& cfg = ctx.cfg;
  std::unique_ptr<JacobiCache> cache;
  const auto scan = build_scan(cfg, cache, ctx.err);
  std::vector<ApRecord> records;
  for (const auto& c : selected_curves(cfg))
    for (const auto& d : scan.primes()) records.push_back({d.p, c, ap_from_jacobi(d, c)});
  for (const auto& r : records) {
    if (!within_weil_bound(r)) {
      ctx.err << "error: Weil bound violated at p=" << r.p << " for " << r.curve.name() << '\n';
      return kInvariantFailure;
    }
  }
  std::filesystem::create_directories(cfg.out);
  const auto path = std::filesystem::path(cfg.out) / ("ap_l" + std::to_string(cfg.ell) + ".csv");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_ap_csv(os, records);
  ctx.out << "wrote " << path.string() << " (" << records.size() << " records)\n";
  return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Jacobi sums, Chebyshev-bias sums and partial Euler products for Fermat curves", "bias"};
  app.set_config("--config", "", "TOML file with option values");
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--ell", cfg.ell, "odd prime degree l")->capture_default_str();
  app.add_option("--curve", cfg.curve, "all | fermat | quotient")->capture_default_str();
  app.add_option("--k", cfg.k, "quotient index (with --curve quotient)");
  app.add_option("--x-max", cfg.x_max, "largest cutoff x")->capture_default_str();
  app.add_option("--grid", cfg.grid, "geometric, geometric:N, or a comma list of cutoffs")->capture_default_str();
  app.add_option("--m", cfg.m, "assumed order(s) at s=1/2: N, or fermat=N,k1=N,...")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads (0: all cores)");
  app.add_option("--cache", cfg.cache, "JSONL cache of Jacobi sums");
  app.add_option("--oracle-cap", cfg.oracle_cap, "largest p for brute-force point counts")->capture_default_str();
  app.add_option("--table-cap", cfg.table_cap, "largest residue field table")->capture_default_str();
  app.add_option("--out", cfg.out, "output directory")->capture_default_str();
  app.add_flag("--no-header-timestamp", cfg.no_header_timestamp, "omit the timestamped comment line in CSVs");
  app.add_option("--fit-lo", cfg.fit_lo, "lower end of the fit window")->capture_default_str();
  app.add_option("--fit-hi", cfg.fit_hi, "upper end of the fit window (0: x-max)");

  auto* compute = app.add_subcommand("compute", "write series CSVs for each curve");
  auto* verify = app.add_subcommand("verify", "check the exact identities and report witnesses");
  auto* fit = app.add_subcommand("fit", "fit the bias sums against log log x");
  auto* exp = app.add_subcommand("export", "write a_p records as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Context ctx{cfg, out, err};
  try {
    validate(cfg);
    if (*compute) return cmd_compute(ctx);
    if (*verify) return cmd_verify(ctx);
    if (*fit) return cmd_fit(ctx);
    if (*exp) return cmd_export(ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const TableCapExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kResourceCap;
  } catch (const InvariantViolation& e) {
    err << "error: " << e.what() << '\n';
    return kInvariantFailure;
  }
  return kUsage;
}

}  // namespace fbias::cli
