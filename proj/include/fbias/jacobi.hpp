#pragma once

// Jacobi sums J_(k1,k2)(P) = -sum_lambda chi_P(lambda)^k1 chi_P(1-lambda)^k2 in Z[zeta_ell].

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fbias/arith.hpp"
#include "fbias/cyclotomic.hpp"
#include "fbias/error.hpp"
#include "fbias/fields.hpp"

namespace fbias {

inline int mod_ell(long long a, int ell) { return static_cast<int>(((a % ell) + ell) % ell); }

inline int inverse_mod_ell(int a, int ell) { return GaloisElement(ell, a).inverse().t(); }

// I_ell = {(k1,k2) in G x G : k1 + k2 != 0}, with orbit representatives (k,1).
struct IndexSet {
  int ell;

  explicit IndexSet(int ell_) : ell(ell_) {}

  bool contains(int k1, int k2) const {
    k1 = mod_ell(k1, ell);
    k2 = mod_ell(k2, ell);
    return k1 != 0 && k2 != 0 && (k1 + k2) % ell != 0;
  }

  // All pairs in (k, t) lexicographic order, as (k t, t).
  std::vector<std::pair<int, int>> pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int k = 1; k <= ell - 2; ++k)
      for (int t = 1; t <= ell - 1; ++t) out.emplace_back(mod_ell(static_cast<long long>(k) * t, ell), t);
    return out;
  }

  std::vector<std::pair<int, int>> orbit_reps() const {
    std::vector<std::pair<int, int>> out;
    for (int k = 1; k <= ell - 2; ++k) out.emplace_back(k, 1);
    return out;
  }

  // (k1,k2) = (k t, t) with t = k2, k = k1 / k2.
  std::pair<int, int> rep_and_twist(int k1, int k2) const {
    if (!contains(k1, k2)) throw std::invalid_argument("pair outside I_ell");
    const int t = mod_ell(k2, ell);
    const int k = mod_ell(static_cast<long long>(mod_ell(k1, ell)) * inverse_mod_ell(t, ell), ell);
    return {k, t};
  }
};

namespace detail {

inline void check_pair(int ell, int k1, int k2) {
  if (!IndexSet(ell).contains(k1, k2))
    throw std::invalid_argument("(" + std::to_string(k1) + "," + std::to_string(k2) +
                                ") is outside I_ell (need k1, k2, k1+k2 nonzero mod ell)");
}

// Counts C[a*ell + b] = #{lambda not in {0,1} : ind(lambda) = a, ind(1-lambda) = b}.
inline std::vector<u64> pair_counts(const FqTable& table) {
  const auto ell = static_cast<std::size_t>(table.ell());
  std::vector<u64> counts(ell * ell, 0);
  const std::uint8_t* ind = table.index().data();
  const u64 q = table.q();
  if (table.f() == 1) {
    // lambda and 1 - lambda = p + 1 - lambda sweep the same pairs from both ends,
    // so count lambda < (p+1)/2 once and symmetrize.
    const u64 p = q;
    const u64 mid = (p + 1) / 2;
    std::vector<std::uint32_t> half(ell * ell * 4, 0);
    std::uint32_t* h0 = half.data();
    std::uint32_t* h1 = h0 + ell * ell;
    std::uint32_t* h2 = h1 + ell * ell;
    std::uint32_t* h3 = h2 + ell * ell;
    u64 lambda = 2;
    for (; lambda + 3 < mid; lambda += 4) {
      ++h0[ind[lambda] * ell + ind[p + 1 - lambda]];
      ++h1[ind[lambda + 1] * ell + ind[p - lambda]];
      ++h2[ind[lambda + 2] * ell + ind[p - 1 - lambda]];
      ++h3[ind[lambda + 3] * ell + ind[p - 2 - lambda]];
    }
    for (; lambda < mid; ++lambda) ++h0[ind[lambda] * ell + ind[p + 1 - lambda]];
    for (std::size_t a = 0; a < ell; ++a) {
      for (std::size_t b = 0; b < ell; ++b) {
        const std::size_t ab = a * ell + b, ba = b * ell + a;
        counts[ab] = u64{h0[ab]} + h1[ab] + h2[ab] + h3[ab] + h0[ba] + h1[ba] + h2[ba] + h3[ba];
      }
    }
    if (mid >= 2 && mid < p && (2 * mid) % p == 1) {
      const std::size_t a = ind[mid];
      counts[a * ell + a] += 1;
    }
  } else {
    for (u64 lambda = 2; lambda < q; ++lambda) ++counts[ind[lambda] * ell + ind[table.one_minus(lambda)]];
  }
  return counts;
}

inline CycInt sum_from_counts(int ell, const std::vector<u64>& counts, int k1, int k2) {
  std::vector<BigInt> full(static_cast<std::size_t>(ell));
  for (int a = 0; a < ell; ++a) {
    for (int b = 0; b < ell; ++b) {
      const u64 c = counts[static_cast<std::size_t>(a * ell + b)];
      if (c == 0) continue;
      full[static_cast<std::size_t>(mod_ell(static_cast<long long>(k1) * a + static_cast<long long>(k2) * b, ell))] -= c;
    }
  }
  return CycInt(ell, std::move(full));
}

}  // namespace detail

// Direct evaluation of one Jacobi sum from the index table.
inline CycInt jacobi_sum(const FqTable& table, int k1, int k2) {
  const int ell = table.ell();
  detail::check_pair(ell, k1, k2);
  k1 = mod_ell(k1, ell);
  k2 = mod_ell(k2, ell);
  std::vector<u64> c(static_cast<std::size_t>(ell), 0);
  std::vector<std::uint8_t> times1(static_cast<std::size_t>(ell)), times2(static_cast<std::size_t>(ell));
  for (int a = 0; a < ell; ++a) {
    times1[static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(a * k1 % ell);
    times2[static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(a * k2 % ell);
  }
  const auto ellu = static_cast<unsigned>(ell);
  for (u64 lambda = 2; lambda < table.q(); ++lambda) {
    const unsigned j = times1[table.ind(lambda)] + times2[table.ind(table.one_minus(lambda))];
    ++c[j >= ellu ? j - ellu : j];
  }
  std::vector<BigInt> full(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) full[j] = -BigInt(c[j]);
  return CycInt(ell, std::move(full));
}

// J_(k,1) for k = 1..ell-2 from a single pass over the table.
inline std::vector<CycInt> orbit_rep_sums(const FqTable& table) {
  const auto counts = detail::pair_counts(table);
  std::vector<CycInt> reps;
  for (int k = 1; k <= table.ell() - 2; ++k) reps.push_back(detail::sum_from_counts(table.ell(), counts, k, 1));
  return reps;
}

struct JacobiRecord {
  int ell = 0;
  u64 p = 0;
  int f = 0;
  int k1 = 0;
  int k2 = 0;
  CycInt value;
};

struct JacobiEntry {
  PrimeOfF prime;
  int k1 = 0;
  int k2 = 0;
  CycInt value;
};

// Jacobi data for every prime above p, stored as the orbit representatives
// J_(k,1)(P) at the canonical prime P; the rest follows from
// J_(k1,k2)(sigma_s P) = sigma_s J_(k1,k2)(P) = sigma_{s k2} J_(k1/k2, 1)(P).
struct JacobiAtP {
  int ell = 0;
  u64 p = 0;
  int f = 0;
  u64 q = 0;
  std::vector<CycInt> reps;  // index k-1; empty when q exceeded the table budget

  bool has_values() const { return !reps.empty(); }

  std::vector<PrimeOfF> primes() const { return primes_above(p, ell); }

  const CycInt& rep(int k) const { return reps.at(static_cast<std::size_t>(k - 1)); }

  CycInt value(int twist, int k1, int k2) const {
    const auto [k, t] = IndexSet(ell).rep_and_twist(k1, k2);
    return galois_apply(GaloisElement(ell, static_cast<long long>(twist) * t), rep(k));
  }

  CycInt value(const PrimeOfF& prime, int k1, int k2) const { return value(prime.t, k1, k2); }

  // Every prime above p times every pair of I_ell, ordered by (t, k1, k2).
  std::vector<JacobiEntry> all_values() const {
    std::vector<JacobiEntry> out;
    for (const auto& prime : primes()) {
      for (int k1 = 1; k1 < ell; ++k1) {
        for (int k2 = 1; k2 < ell; ++k2) {
          if ((k1 + k2) % ell == 0) continue;
          out.push_back(JacobiEntry{prime, k1, k2, value(prime, k1, k2)});
        }
      }
    }
    return out;
  }
};

struct JacobiOptions {
  u64 table_cap = kDefaultTableCap;
  bool even_degree_fast_path = true;
};

// Closed form for even residue degree: every Jacobi sum is -p^(f/2).
inline std::vector<CycInt> even_degree_reps(u64 p, int f, int ell) {
  BigInt root = 1;
  for (int i = 0; i < f / 2; ++i) root *= p;
  return std::vector<CycInt>(static_cast<std::size_t>(ell - 2), CycInt::integer(ell, -root));
}

inline JacobiAtP jacobi_sums_at_p(u64 p, int ell, const JacobiOptions& opts = {}) {
  if (p == static_cast<u64>(ell)) throw RamifiedPrime(p);
  JacobiAtP out;
  out.ell = ell;
  out.p = p;
  out.f = residue_degree(p, static_cast<u64>(ell));
  out.q = saturating_power(p, out.f);
  if (out.f % 2 == 0 && opts.even_degree_fast_path) {
    out.reps = even_degree_reps(p, out.f, ell);
  } else {
    if (out.q > opts.table_cap) throw TableCapExceeded(out.q, opts.table_cap);
    out.reps = orbit_rep_sums(build_field_table(p, ell, opts.table_cap));
  }
  return out;
}

inline JacobiAtP jacobi_sums_at_p(u64 p, int ell, u64 cap) {
  JacobiOptions opts;
  opts.table_cap = cap;
  return jacobi_sums_at_p(p, ell, opts);
}

// Append-only JSONL store of exact Jacobi sums keyed by (ell, p, f, k1, k2).
class JacobiCache {
 public:
  using Key = std::tuple<int, u64, int, int, int>;

  JacobiCache() = default;

  // Loads an existing file (if any); unreadable lines are skipped with a warning.
  explicit JacobiCache(std::string path, std::ostream* warnings = &std::cerr) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        auto rec = parse_line(line);
        entries_[key_of(rec)] = std::move(rec.value);
      } catch (const std::exception& e) {
        ++skipped_;
        if (warnings)
          *warnings << "warning: " << path_ << ":" << lineno << ": skipping corrupt cache line (" << e.what()
                    << ")\n";
      }
    }
  }

  static std::string format_line(const JacobiRecord& rec) {
    nlohmann::ordered_json j;
    j["l"] = rec.ell;
    j["p"] = rec.p;
    j["f"] = rec.f;
    j["k1"] = rec.k1;
    j["k2"] = rec.k2;
    j["c"] = cyc_to_json(rec.value);
    return j.dump();
  }

  static JacobiRecord parse_line(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    JacobiRecord rec;
    rec.ell = j.at("l").get<int>();
    rec.p = j.at("p").get<u64>();
    rec.f = j.at("f").get<int>();
    rec.k1 = j.at("k1").get<int>();
    rec.k2 = j.at("k2").get<int>();
    if (rec.ell < 3 || !IndexSet(rec.ell).contains(rec.k1, rec.k2)) throw std::invalid_argument("bad key");
    rec.value = cyc_from_json(rec.ell, j.at("c"));
    return rec;
  }

  std::optional<CycInt> get(int ell, u64 p, int f, int k1, int k2) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(Key{ell, p, f, k1, k2});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  // Orbit representatives J_(k,1), k = 1..ell-2, if all are cached.
  std::optional<std::vector<CycInt>> get_reps(int ell, u64 p, int f) const {
    std::vector<CycInt> reps;
    for (int k = 1; k <= ell - 2; ++k) {
      auto v = get(ell, p, f, k, 1);
      if (!v) return std::nullopt;
      reps.push_back(std::move(*v));
    }
    return reps;
  }

  void put(const JacobiRecord& rec) { put_all({rec}); }

  // Appends all records with a single open of the file.
  void put_all(const std::vector<JacobiRecord>& records) {
    std::lock_guard lock(mutex_);
    for (const auto& rec : records) entries_[key_of(rec)] = rec.value;
    if (path_.empty() || records.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to cache file " + path_);
    for (const auto& rec : records) out << format_line(rec) << '\n';
  }

  static std::vector<JacobiRecord> records_of(const JacobiAtP& data) {
    std::vector<JacobiRecord> out;
    for (int k = 1; k <= data.ell - 2; ++k) out.push_back(JacobiRecord{data.ell, data.p, data.f, k, 1, data.rep(k)});
    return out;
  }

  void put_reps(const JacobiAtP& data) { put_all(records_of(data)); }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }
  std::size_t skipped_lines() const { return skipped_; }
  const std::string& path() const { return path_; }

 private:
  static Key key_of(const JacobiRecord& r) { return Key{r.ell, r.p, r.f, r.k1, r.k2}; }

  std::string path_;
  std::map<Key, CycInt> entries_;
  std::size_t skipped_ = 0;
  mutable std::mutex mutex_;
};

}  // namespace fbias
