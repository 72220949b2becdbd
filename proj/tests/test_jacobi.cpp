#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fbias/jacobi.hpp"
#include "fbias/jacobi_scan.hpp"
#include "oracles.hpp"

using namespace fbias;

namespace {

std::string temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fbias_" + name + "_" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(p);
  return p.string();
}

std::vector<std::vector<BigInt>> sorted_coeffs(std::vector<CycInt> v) {
  std::vector<std::vector<BigInt>> out;
  for (auto& c : v) out.push_back(c.coeffs());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(IndexSet, SizeAndUniqueDecomposition) {
  for (int ell : {3, 5, 7, 11}) {
    IndexSet I(ell);
    const auto pairs = I.pairs();
    EXPECT_EQ(pairs.size(), static_cast<std::size_t>((ell - 1) * (ell - 2)));
    std::set<std::pair<int, int>> distinct(pairs.begin(), pairs.end());
    EXPECT_EQ(distinct.size(), pairs.size());
    for (auto [k1, k2] : pairs) {
      EXPECT_TRUE(I.contains(k1, k2));
      const auto [k, t] = I.rep_and_twist(k1, k2);
      EXPECT_GE(k, 1);
      EXPECT_LE(k, ell - 2);
      EXPECT_EQ(mod_ell(static_cast<long long>(k) * t, ell), k1);
      EXPECT_EQ(t, k2);
    }
    EXPECT_FALSE(I.contains(1, ell - 1));
    EXPECT_THROW(I.rep_and_twist(1, ell - 1), std::invalid_argument);
  }
}

TEST(JacobiSum, SevenModThree) {
  const auto t = build_prime_field_table(7, 3);
  const auto J = jacobi_sum(t, 1, 1);
  EXPECT_EQ(abs_square(J), CycInt::integer(3, 7));
  EXPECT_EQ(J + complex_conjugate(J), CycInt::integer(3, -1));
  EXPECT_TRUE(J == CycInt(3, {-2, -3}) || J == complex_conjugate(CycInt(3, {-2, -3})));
  EXPECT_EQ(J, oracle::naive_jacobi(7, 3, 3, 1, 1));
  EXPECT_THROW(jacobi_sum(t, 1, 2), std::invalid_argument);
}

TEST(JacobiSum, FieldOfFourIsMinusTwo) {
  const auto t = build_extension_field_table(2, 2, 3);
  EXPECT_EQ(jacobi_sum(t, 1, 1), CycInt::integer(3, -2));
  EXPECT_EQ(jacobi_sum(t, 2, 2), CycInt::integer(3, -2));
}

TEST(JacobiSum, ElevenModFive) {
  const auto t = build_prime_field_table(11, 5);
  for (auto [k1, k2] : IndexSet(5).pairs()) EXPECT_EQ(abs_square(jacobi_sum(t, k1, k2)), CycInt::integer(5, 11));
}

TEST(JacobiSum, FastKernelMatchesDirectCharacterSum) {
  for (int ell : {3, 5, 7, 11, 13}) {
    for (u64 p : primes_up_to(700)) {
      if (p % static_cast<u64>(ell) != 1) continue;
      const auto t = build_prime_field_table(p, ell);
      const auto reps = orbit_rep_sums(t);
      for (int k = 1; k <= ell - 2; ++k) {
        EXPECT_EQ(reps[static_cast<std::size_t>(k - 1)], oracle::naive_jacobi(p, ell, t.generator(), k, 1)) << p << " " << ell;
        EXPECT_EQ(reps[static_cast<std::size_t>(k - 1)], jacobi_sum(t, k, 1));
      }
    }
  }
}

TEST(JacobiProperty, NormEqualsQForEverySum) {
  for (int ell : {3, 5, 7}) {
    for (u64 p : primes_up_to(3000)) {
      if (p == static_cast<u64>(ell)) continue;
      const int f = residue_degree(p, ell);
      if (saturating_power(p, f) > 200000) continue;
      JacobiOptions opts;
      opts.even_degree_fast_path = false;
      const auto data = jacobi_sums_at_p(p, ell, opts);
      const auto q = CycInt::integer(ell, BigInt(data.q));
      for (const auto& e : data.all_values()) EXPECT_EQ(abs_square(e.value), q) << p << " " << ell;
    }
  }
}

TEST(JacobiProperty, GaloisConsistencyOnTheTable) {
  for (auto [p, ell] : std::vector<std::pair<u64, int>>{{7, 3}, {31, 5}, {29, 7}, {2, 7}, {3, 5}, {67, 11}, {23, 11}}) {
    const auto t = build_field_table(p, ell);
    for (auto [k1, k2] : IndexSet(ell).pairs()) {
      const auto base = jacobi_sum(t, k1, k2);
      for (int s = 1; s < ell; ++s)
        EXPECT_EQ(jacobi_sum(t, mod_ell(static_cast<long long>(k1) * s, ell), mod_ell(static_cast<long long>(k2) * s, ell)),
                  galois_apply(GaloisElement(ell, s), base));
    }
  }
}

TEST(JacobiProperty, DerivedValuesAtConjugatePrimesMatchTableAtThatPrime) {
  // sigma_s P corresponds to the character chi^s (chi composed with sigma_s), i.e. J_(k1,k2)(sigma_s P) = J_(s k1, s k2)(P)
  for (auto [p, ell] : std::vector<std::pair<u64, int>>{{7, 3}, {11, 5}, {29, 7}, {2, 7}}) {
    const auto data = jacobi_sums_at_p(p, ell);
    const auto t = build_field_table(p, ell);
    for (const auto& e : data.all_values()) {
      const int s = e.prime.t;
      EXPECT_EQ(e.value, jacobi_sum(t, mod_ell(static_cast<long long>(e.k1) * s, ell), mod_ell(static_cast<long long>(e.k2) * s, ell)));
    }
  }
}

TEST(JacobiAtP, Examples) {
  const auto d7 = jacobi_sums_at_p(7, 3);
  const auto v = d7.all_values();
  ASSERT_EQ(v.size(), 4u);
  const auto J = d7.rep(1);
  std::multiset<std::vector<BigInt>> got, want{J.coeffs(), J.coeffs(), complex_conjugate(J).coeffs(), complex_conjugate(J).coeffs()};
  for (const auto& e : v) got.insert(e.value.coeffs());
  EXPECT_EQ(got, want);

  const auto d2 = jacobi_sums_at_p(2, 3);
  ASSERT_EQ(d2.all_values().size(), 2u);
  for (const auto& e : d2.all_values()) EXPECT_EQ(e.value, CycInt::integer(3, -2));
  for (const auto& e : jacobi_sums_at_p(5, 3).all_values()) EXPECT_EQ(e.value, CycInt::integer(3, -5));
  EXPECT_THROW(jacobi_sums_at_p(3, 3), RamifiedPrime);
  EXPECT_THROW(jacobi_sums_at_p(10009, 3, u64{1000}), TableCapExceeded);
}

TEST(JacobiProperty, EvenDegreeTablePathIsMinusRootQ) {
  std::size_t checked = 0;
  for (int ell : {3, 5, 7, 11, 13}) {
    for (u64 p : primes_up_to(10000)) {
      if (p == static_cast<u64>(ell)) continue;
      const int f = residue_degree(p, ell);
      if (f % 2 != 0 || saturating_power(p, f) > 10000) continue;
      JacobiOptions opts;
      opts.even_degree_fast_path = false;
      const auto table = jacobi_sums_at_p(p, ell, opts);
      const auto fast = jacobi_sums_at_p(p, ell);
      EXPECT_EQ(table.reps, fast.reps) << p << " " << ell;
      ++checked;
    }
  }
  EXPECT_GT(checked, 20u);
}

TEST(JacobiProperty, SplitPrimeSumsAreNotReal) {
  for (int ell : {3, 5, 7}) {
    for (u64 p : primes_up_to(3000)) {
      if (p % static_cast<u64>(ell) != 1) continue;
      for (const auto& J : jacobi_sums_at_p(p, ell).reps) {
        EXPECT_NE(J, complex_conjugate(J));
        const auto J2 = J * J;
        EXPECT_NE(J2, complex_conjugate(J2));
      }
    }
  }
}

TEST(JacobiProperty, OtherGeneratorPermutesWithinOrbits) {
  for (int ell : {3, 5, 7}) {
    for (u64 p : primes_up_to(1500)) {
      if (p % static_cast<u64>(ell) != 1) continue;
      const auto t1 = build_prime_field_table(p, ell);
      u64 g2 = t1.generator() + 1;
      while (oracle::naive_order(g2, p) != p - 1) ++g2;
      const auto t2 = build_prime_field_table(p, ell, g2);
      CycInt total1(ell), total2(ell);
      for (auto [k1, k2] : IndexSet(ell).pairs()) {
        total1 = total1 + jacobi_sum(t1, k1, k2);
        total2 = total2 + jacobi_sum(t2, k1, k2);
      }
      EXPECT_EQ(total1, total2);
      EXPECT_TRUE(total1.is_rational());
      // the full Galois orbit of each representative is the same multiset
      for (int k = 1; k <= ell - 2; ++k) {
        std::vector<CycInt> o1, o2;
        for (int t = 1; t < ell; ++t) {
          o1.push_back(jacobi_sum(t1, mod_ell(static_cast<long long>(k) * t, ell), t));
          o2.push_back(jacobi_sum(t2, mod_ell(static_cast<long long>(k) * t, ell), t));
        }
        EXPECT_EQ(sorted_coeffs(o1), sorted_coeffs(o2));
      }
    }
  }
}

TEST(JacobiCache, RoundTripAndMiss) {
  const auto path = temp_path("roundtrip");
  const JacobiRecord rec{3, 7, 1, 1, 1, CycInt(3, {-2, -3})};
  EXPECT_EQ(JacobiCache::format_line(rec), R"({"l":3,"p":7,"f":1,"k1":1,"k2":1,"c":["-2","-3"]})");
  {
    JacobiCache cache(path);
    EXPECT_FALSE(cache.get(3, 7, 1, 1, 1));
    cache.put(rec);
    EXPECT_EQ(*cache.get(3, 7, 1, 1, 1), rec.value);
  }
  JacobiCache reloaded(path);
  EXPECT_EQ(reloaded.size(), 1u);
  EXPECT_EQ(*reloaded.get(3, 7, 1, 1, 1), rec.value);
  EXPECT_FALSE(reloaded.get(3, 13, 1, 1, 1));
  std::filesystem::remove(path);
}

TEST(JacobiCache, CorruptLinesAreSkippedWithWarning) {
  const auto path = temp_path("corrupt");
  {
    std::ofstream out(path);
    out << R"({"l":3,"p":7,"f":1,"k1":1,"k2":1,"c":["-2","-3"]})" << '\n'
        << R"({"l":3,"p":13,"f":1,"k1":1)" << '\n'
        << "garbage\n"
        << R"({"l":3,"p":13,"f":1,"k1":1,"k2":2,"c":["1","1"]})" << '\n'
        << R"({"l":5,"p":11,"f":1,"k1":1,"k2":1,"c":["1","2"]})" << '\n';
  }
  std::ostringstream warn;
  JacobiCache cache(path, &warn);
  EXPECT_EQ(cache.size(), 1u);
  EXPECT_EQ(cache.skipped_lines(), 4u);
  EXPECT_NE(warn.str().find("skipping corrupt cache line"), std::string::npos);

  // the scan recomputes whatever is missing
  const auto before = table_build_count();
  auto scan = JacobiScan::build(3, 100, ScanOptions{kDefaultTableCap, 1, &cache});
  EXPECT_EQ(scan.stats().cache_hits, 1u);
  EXPECT_EQ(table_build_count() - before, scan.stats().computed);
  EXPECT_EQ(scan.find(13)->rep(1), jacobi_sums_at_p(13, 3).rep(1));
  std::filesystem::remove(path);
}

TEST(JacobiCache, TenThousandRecordsReloadWithoutRebuilds) {
  const auto path = temp_path("warm");
  std::size_t records = 0;
  {
    JacobiCache cache(path);
    auto scan = JacobiScan::build(5, 170000, ScanOptions{kDefaultTableCap, 1, &cache});
    records = cache.size();
  }
  ASSERT_GE(records, 10000u);
  JacobiCache warm(path);
  EXPECT_EQ(warm.size(), records);
  const auto before = table_build_count();
  auto scan = JacobiScan::build(5, 170000, ScanOptions{kDefaultTableCap, 1, &warm});
  EXPECT_EQ(table_build_count(), before);
  EXPECT_EQ(scan.stats().computed, 0u);
  EXPECT_EQ(warm.size(), records);
  std::filesystem::remove(path);
}

TEST(JacobiScan, ThreadCountDoesNotChangeResults) {
  const auto a = JacobiScan::build(7, 20000, ScanOptions{kDefaultTableCap, 1, nullptr});
  const auto b = JacobiScan::build(7, 20000, ScanOptions{kDefaultTableCap, 4, nullptr});
  ASSERT_EQ(a.primes().size(), b.primes().size());
  for (std::size_t i = 0; i < a.primes().size(); ++i) EXPECT_EQ(a.primes()[i].reps, b.primes()[i].reps);
  const auto bn = a.by_norm();
  for (std::size_t i = 1; i < bn.size(); ++i) EXPECT_LE(bn[i - 1]->q, bn[i]->q);
  EXPECT_EQ(a.find(7), nullptr);
  EXPECT_EQ(a.find(29)->f, 1);
}
