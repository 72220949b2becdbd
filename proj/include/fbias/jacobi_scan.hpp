#pragma once

// Jacobi data for every rational prime up to a cutoff, computed in parallel.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fbias/arith.hpp"
#include "fbias/jacobi.hpp"
#include "fbias/parallel.hpp"

namespace fbias {

struct ScanOptions {
  u64 table_cap = kDefaultTableCap;
  unsigned threads = 1;
  JacobiCache* cache = nullptr;  // read before computing, appended after
};

struct ScanStats {
  std::size_t computed = 0;    // sums obtained from index tables
  std::size_t cache_hits = 0;  // primes served entirely from the cache
  std::size_t closed_form = 0; // even residue degree
};

// For each prime p <= x_max (p != ell), orbit representatives J_(k,1) at the
// canonical prime above p. Values are present whenever they can matter for a
// cutoff x <= x_max: f = 1, f even (closed form), or q = p^f <= x_max.
class JacobiScan {
 public:
  JacobiScan() = default;

  static JacobiScan build(int ell, u64 x_max, const ScanOptions& opts = {}) {
    LevelConfig::make(ell);
    JacobiScan scan;
    scan.ell_ = ell;
    scan.x_max_ = x_max;
    for (u64 p : primes_up_to(x_max)) {
      if (p == static_cast<u64>(ell)) continue;
      JacobiAtP d;
      d.ell = ell;
      d.p = p;
      d.f = residue_degree(p, static_cast<u64>(ell));
      d.q = saturating_power(p, d.f);
      scan.data_.push_back(std::move(d));
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < scan.data_.size(); ++i) {
      auto& d = scan.data_[i];
      if (d.f % 2 == 0) {
        d.reps = even_degree_reps(d.p, d.f, ell);
        ++scan.stats_.closed_form;
      } else if (d.q <= x_max) {
        if (opts.cache) {
          if (auto reps = opts.cache->get_reps(ell, d.p, d.f)) {
            d.reps = std::move(*reps);
            ++scan.stats_.cache_hits;
            continue;
          }
        }
        todo.push_back(i);
      }
    }

    // Largest primes first so the long tasks do not straggle at the end.
    std::reverse(todo.begin(), todo.end());
    parallel_for(todo.size(), opts.threads, [&](std::size_t j) {
      auto& d = scan.data_[todo[j]];
      d.reps = orbit_rep_sums(build_field_table(d.p, ell, opts.table_cap));
    });
    std::reverse(todo.begin(), todo.end());
    scan.stats_.computed = todo.size();

    if (opts.cache && !todo.empty()) {
      std::vector<JacobiRecord> records;
      for (std::size_t i : todo) {
        auto r = JacobiCache::records_of(scan.data_[i]);
        records.insert(records.end(), r.begin(), r.end());
      }
      opts.cache->put_all(records);
    }

    for (std::size_t i = 0; i < scan.data_.size(); ++i)
      if (scan.data_[i].has_values() && scan.data_[i].q <= x_max) scan.by_norm_.push_back(i);
    std::stable_sort(scan.by_norm_.begin(), scan.by_norm_.end(),
                     [&](std::size_t a, std::size_t b) { return scan.data_[a].q < scan.data_[b].q; });
    return scan;
  }

  int ell() const { return ell_; }
  u64 x_max() const { return x_max_; }
  const ScanStats& stats() const { return stats_; }

  // Every prime p <= x_max except ell, increasing.
  const std::vector<JacobiAtP>& primes() const { return data_; }

  // Primes with q = p^f <= x_max, in increasing order of q.
  std::vector<const JacobiAtP*> by_norm() const {
    std::vector<const JacobiAtP*> out;
    out.reserve(by_norm_.size());
    for (std::size_t i : by_norm_) out.push_back(&data_[i]);
    return out;
  }

  const JacobiAtP* find(u64 p) const {
    auto it = std::lower_bound(data_.begin(), data_.end(), p, [](const JacobiAtP& d, u64 v) { return d.p < v; });
    return it != data_.end() && it->p == p ? &*it : nullptr;
  }

  // Mutable access for fault-injection tests.
  std::vector<JacobiAtP>& mutable_primes() { return data_; }

 private:
  int ell_ = 3;
  u64 x_max_ = 0;
  std::vector<JacobiAtP> data_;
  std::vector<std::size_t> by_norm_;
  ScanStats stats_;
};

}  // namespace fbias
