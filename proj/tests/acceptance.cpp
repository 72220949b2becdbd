// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any
// hard criterion fails; report-only criteria print their line but never fail the run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fbias/cli.hpp"
#include "fbias/curves.hpp"
#include "fbias/jacobi_scan.hpp"
#include "fbias/lfunc.hpp"
#include "oracles.hpp"

using namespace fbias;

namespace {

// tolerances
constexpr double kFactorizationRel = 1e-10;
constexpr double kDecompositionAbs = 1e-9;
constexpr double kEigenvalueTol = 1e-9;  // scaled by sqrt(p)
constexpr double kFitSlopeTol = 0.5;
constexpr double kOracleSeconds = 120.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int hard_failures = 0;

void report(const std::string& name, const Outcome& o, bool hard = true) {
  std::cout << (o.pass ? "PASS " : "FAIL ") << name;
  if (!hard) std::cout << " [report-only]";
  std::cout << ": " << o.detail << std::endl;
  if (hard && !o.pass) ++hard_failures;
}

void run_criterion(const std::string& name, const std::function<Outcome()>& body, bool hard = true) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(name, o, hard);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::map<int, JacobiScan> scans;

const JacobiScan& scan_for(int ell) {
  auto it = scans.find(ell);
  if (it == scans.end()) {
    ScanOptions opts;
    opts.threads = std::max(1u, std::thread::hardware_concurrency());
    it = scans.emplace(ell, JacobiScan::build(ell, 1000000, opts)).first;
  }
  return it->second;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

bool same_multiset(const std::vector<Complex>& a, const std::vector<Complex>& b, double tol) {
  if (a.size() != b.size()) return false;
  std::vector<char> used(b.size(), 0);
  for (const auto& x : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size() && !found; ++j) {
      if (!used[j] && std::abs(x - b[j]) <= tol) {
        used[j] = 1;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();

  run_criterion("oracle equivalence (l=3,5,7; p<=2000)", [] {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t n = 0;
    for (int ell : {3, 5, 7}) {
      for (u64 p : oracle::naive_primes(2000)) {
        if (p == static_cast<u64>(ell)) continue;
        JacobiAtP data;
        if (residue_degree(p, ell) == 1) data = jacobi_sums_at_p(p, ell);
        long long quotient_total = 0, fermat = 0;
        for (const auto& c : all_curves(ell)) {
          const long long a = data.has_values() ? ap_from_jacobi(data, c) : ap_from_jacobi(p, c);
          const u64 count = c.is_fermat() ? oracle::fiber_fermat_count(p, ell) : oracle::fiber_quotient_count(p, ell, c.k);
          if (a != static_cast<long long>(p + 1) - static_cast<long long>(count))
            return Outcome{false, "l=" + std::to_string(ell) + " p=" + std::to_string(p) + " " + c.name()};
          if (c.is_fermat())
            fermat = a;
          else
            quotient_total += a;
          ++n;
        }
        if (quotient_total != fermat)
          return Outcome{false, "sum over quotients differs at l=" + std::to_string(ell) + " p=" + std::to_string(p)};
      }
    }
    const double secs = seconds_since(t0);
    return Outcome{secs < kOracleSeconds, std::to_string(n) + " a_p values agree, " + fmt(secs) + " s"};
  });

  run_criterion("|J|^2 = q exactly (q<=1e6; l=3,5,7)", [] {
    std::size_t n = 0;
    for (int ell : {3, 5, 7}) {
      for (const auto& d : scan_for(ell).primes()) {
        if (!d.has_values() || d.q > 1000000) continue;
        const auto q = CycInt::integer(ell, BigInt(d.q));
        for (const auto& e : d.all_values()) {
          ++n;
          if (abs_square(e.value) != q)
            return Outcome{false, "l=" + std::to_string(ell) + " p=" + std::to_string(d.p) + " t=" + std::to_string(e.prime.t)};
        }
      }
    }
    return Outcome{true, std::to_string(n) + " sums"};
  });

  run_criterion("even f: table J = -p^(f/2) (q<=1e4)", [] {
    std::size_t n = 0;
    for (int ell : {3, 5, 7, 11, 13}) {
      for (u64 p : oracle::naive_primes(10000)) {
        if (p == static_cast<u64>(ell)) continue;
        const int f = residue_degree(p, ell);
        if (f % 2 != 0 || saturating_power(p, f) > 10000) continue;
        const auto table = build_extension_field_table(p, f, ell);
        BigInt root = 1;
        for (int i = 0; i < f / 2; ++i) root *= p;
        for (auto [k1, k2] : IndexSet(ell).pairs()) {
          ++n;
          if (jacobi_sum(table, k1, k2) != CycInt::integer(ell, -root))
            return Outcome{false, "l=" + std::to_string(ell) + " p=" + std::to_string(p)};
        }
      }
    }
    return Outcome{n > 0, std::to_string(n) + " sums"};
  });

  run_criterion("split primes: J, J^2 non-real (p<=1e4)", [] {
    std::size_t n = 0;
    for (int ell : {3, 5, 7, 11, 13}) {
      for (u64 p : oracle::naive_primes(10000)) {
        if (p % static_cast<u64>(ell) != 1) continue;
        const auto d = jacobi_sums_at_p(p, ell);
        for (const auto& e : d.all_values()) {
          const auto J2 = e.value * e.value;
          ++n;
          if (e.value == complex_conjugate(e.value) || J2 == complex_conjugate(J2))
            return Outcome{false, "l=" + std::to_string(ell) + " p=" + std::to_string(p)};
        }
      }
    }
    return Outcome{true, std::to_string(n) + " sums"};
  });

  run_criterion("Galois equivariance (all pairs, p<=2000)", [] {
    std::size_t n = 0;
    for (int ell : {3, 5, 7}) {
      for (u64 p : oracle::naive_primes(2000)) {
        if (p == static_cast<u64>(ell)) continue;
        const int f = residue_degree(p, ell);
        if (saturating_power(p, f) > 1000000) continue;
        const auto table = build_field_table(p, ell);
        JacobiOptions opts;
        opts.even_degree_fast_path = false;
        const auto data = jacobi_sums_at_p(p, ell, opts);
        for (auto [k1, k2] : IndexSet(ell).pairs()) {
          const auto base = jacobi_sum(table, k1, k2);
          for (int s = 1; s < ell; ++s) {
            const int a = mod_ell(static_cast<long long>(k1) * s, ell), b = mod_ell(static_cast<long long>(k2) * s, ell);
            const auto direct = jacobi_sum(table, a, b);
            n += 2;
            if (direct != galois_apply(GaloisElement(ell, s), base) || data.value(s, k1, k2) != direct)
              return Outcome{false, "l=" + std::to_string(ell) + " p=" + std::to_string(p) + " s=" + std::to_string(s)};
          }
        }
      }
    }
    return Outcome{true, std::to_string(n) + " identities"};
  });

  run_criterion("factorization of partial products (l=5, x<=1e4, s=1/2,3/4)", [] {
    const int ell = 5;
    const auto& scan = scan_for(ell);
    std::vector<u64> grid;
    for (u64 x = 2; x <= 10000; x = x < 100 ? x + 1 : x + 50) grid.push_back(x);
    double worst = 0;
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
        worst = std::max(worst, std::abs(pf - std::exp(quot[i])) / std::abs(pf));
        worst = std::max(worst, std::abs(pf - std::exp(chars[i])) / std::abs(pf));
      }
    }
    return Outcome{worst <= kFactorizationRel, "max relative error " + fmt(worst) + " over " + std::to_string(grid.size()) + " cutoffs"};
  });

  run_criterion("decomposition -log prod det = I+II+III, |III| < bound", [] {
    double worst = 0;
    std::size_t n = 0;
    for (int ell : {3, 5, 7}) {
      const auto grid = cli::make_grid("geometric", 1000000);
      for (const auto& c : all_curves(ell)) {
        for (const auto& d : bias_decomposition_series(scan_for(ell), c, grid)) {
          ++n;
          worst = std::max(worst, d.identity_error());
          if (!(std::abs(d.term_III) < d.bound_III))
            return Outcome{false, "l=" + std::to_string(ell) + " " + c.name() + " x=" + std::to_string(d.x) + " |III| above bound"};
        }
      }
    }
    return Outcome{worst <= kDecompositionAbs, "max identity error " + fmt(worst) + " over " + std::to_string(n) + " samples"};
  });

  run_criterion("base change: eigenvalue multisets (p<=500; l=3,5) and P_2 at l=3", [] {
    std::size_t n = 0;
    for (int ell : {3, 5}) {
      for (u64 p : oracle::naive_primes(500)) {
        if (p == static_cast<u64>(ell)) continue;
        const auto data = jacobi_sums_at_p(p, ell);
        for (const auto& c : all_curves(ell)) {
          std::vector<Complex> overQ, overF;
          for (const auto& a : frobenius_eigenvalues_over_Q(data, c))
            for (int i = 0; i < ell - 1; ++i) overQ.push_back(a);
          for (const auto& prime : data.primes()) {
            for (auto [k1, k2] : c.pairs()) {
              const Complex z = embed(data.value(prime, k1, k2));
              const double r = std::pow(std::abs(z), 1.0 / data.f);
              for (int j = 0; j < data.f; ++j)
                overF.push_back(std::polar(r, (std::arg(z) + 2 * std::numbers::pi * j) / data.f));
            }
          }
          ++n;
          if (!same_multiset(overQ, overF, kEigenvalueTol * std::sqrt(static_cast<double>(p))))
            return Outcome{false, "l=" + std::to_string(ell) + " p=" + std::to_string(p) + " " + c.name()};
        }
      }
    }
    const auto d2 = jacobi_sums_at_p(2, 3);
    const auto P = local_factor_over_Q(d2, CurveId::fermat(3)).integer_coeffs();
    const bool poly_ok = P == std::vector<BigInt>{1, 0, 2};
    const u64 n2 = oracle::naive_fermat_count_over(GaloisField(2, 1), 3);
    const u64 n4 = oracle::naive_fermat_count_over(GaloisField(2, 2), 3);
    const bool counts_ok = n2 == 3 && n4 == 9 && point_count_from_jacobi(d2, CurveId::fermat(3), 1) == 3 &&
                           point_count_from_jacobi(d2, CurveId::fermat(3), 2) == 9;
    return Outcome{poly_ok && counts_ok, std::to_string(n) + " multisets; P_2(T) = 1 + 2T^2: " + (poly_ok ? "yes" : "no") +
                                             "; #C(F_2) = " + std::to_string(n2) + ", #C(F_4) = " + std::to_string(n4)};
  });

  run_criterion("Weil bound on every a_p record (l=3,5,7; p<=1e6)", [] {
    std::size_t n = 0;
    for (int ell : {3, 5, 7}) {
      for (const auto& d : scan_for(ell).primes()) {
        for (const auto& c : all_curves(ell)) {
          ++n;
          if (!within_weil_bound(ApRecord{d.p, c, ap_from_jacobi(d, c)}))
            return Outcome{false, "l=" + std::to_string(ell) + " p=" + std::to_string(d.p) + " " + c.name()};
        }
      }
    }
    return Outcome{true, std::to_string(n) + " records"};
  });

  run_criterion("exploratory fit l=3, m=0, x in [1e3,1e6]", [] {
    const auto grid = cli::make_grid("geometric", 1000000);
    const auto c = CurveId::fermat(3);
    const auto fit = loglog_fit(bias_sum(scan_for(3), c, grid), 1000, 1000000);
    std::ostringstream os;
    os << "A = " << fit.slope << ", c = " << fit.intercept << ", residual " << fmt(fit.residual_rms)
       << "; predicted (g-m)/(l-1) = " << predicted_slope(c, 0);
    for (int ell : {3, 5, 7})
      for (const auto& curve : all_curves(ell))
        if (!(ell == 3 && curve.is_fermat())) os << "; l=" << ell << " " << curve.name() << " " << predicted_slope(curve, 0);
    const bool ok = fit.slope > 0 && std::abs(fit.slope - predicted_slope(c, 0)) <= kFitSlopeTol;
    return Outcome{ok, os.str()};
  });

  run_criterion("second-moment drift over Q negative (l=3,5)", [] {
    const auto grid = cli::make_grid("geometric", 1000000);
    std::ostringstream os;
    bool ok = true;
    for (int ell : {3, 5}) {
      const auto c = CurveId::fermat(ell);
      const auto fit = loglog_fit(second_moment_over_Q(scan_for(ell), c, grid), 1000, 1000000);
      os << "l=" << ell << " slope " << fit.slope << " ";
      ok = ok && fit.slope < 0;
    }
    return Outcome{ok, os.str()};
  }, false);

  run_criterion("determinism: threads 1 vs 4 give identical CSV", [] {
    namespace fs = std::filesystem;
    const auto base = fs::temp_directory_path() / ("fbias_accept_" + std::to_string(::getpid()));
    fs::remove_all(base);
    auto compute = [&](const std::string& sub, const std::string& threads) {
      const std::string out = (base / sub).string();
      const char* argv[] = {"bias", "compute", "--ell", "5", "--x-max", "100000", "--threads", threads.c_str(),
                            "--out", out.c_str(), "--no-header-timestamp"};
      std::ostringstream sink;
      return cli::run(11, argv, sink, sink);
    };
    if (compute("a", "1") != 0 || compute("b", "4") != 0) return Outcome{false, "compute failed"};
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(base / "a")) {
      ++files;
      if (slurp(e.path()) != slurp(base / "b" / e.path().filename()))
        return Outcome{false, e.path().filename().string() + " differs"};
    }
    fs::remove_all(base);
    return Outcome{files == 4, std::to_string(files) + " files byte-identical"};
  });

  std::cout << "total " << fmt(seconds_since(start)) << " s, " << hard_failures << " hard failure(s)" << std::endl;
  return hard_failures == 0 ? 0 : 1;
}
