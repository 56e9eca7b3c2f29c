#pragma once

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ekgdisc/detail/bit_matrix.hpp"
#include "ekgdisc/log_math.hpp"
#include "ekgdisc/poset.hpp"

namespace ekgdisc {

/// Limits on one bounding computation. With no limit set the computation
/// runs to the exact count.
struct Budget {
  std::optional<std::chrono::milliseconds> time_limit;
  /// Recursive entries across all deepening passes; deterministic
  /// counterpart of the time limit.
  std::optional<std::uint64_t> node_limit;
  std::optional<unsigned> depth_limit;

  static Budget unbounded() { return {}; }
  static Budget milliseconds(std::int64_t ms) {
    Budget b;
    b.time_limit = std::chrono::milliseconds(ms);
    return b;
  }
  static Budget nodes(std::uint64_t count) {
    Budget b;
    b.node_limit = count;
    return b;
  }
  static Budget depth(unsigned d) {
    Budget b;
    b.depth_limit = d;
    return b;
  }

  bool is_unbounded() const { return !time_limit && !node_limit && !depth_limit; }

  /// Every finite limit multiplied by `factor` (rounded up, saturating).
  Budget scaled(double factor) const {
    auto grow = [factor](double v, double cap) {
      return std::min(cap, std::ceil(v * factor));
    };
    Budget b = *this;
    if (time_limit) {
      b.time_limit = std::chrono::milliseconds(static_cast<std::int64_t>(
          grow(static_cast<double>(time_limit->count()), 9.0e15)));
    }
    if (node_limit) {
      b.node_limit = static_cast<std::uint64_t>(
          grow(static_cast<double>(*node_limit), 1.8e19));
    }
    if (depth_limit) {
      b.depth_limit = static_cast<unsigned>(grow(*depth_limit, 4.0e9));
    }
    return b;
  }

  friend bool operator==(const Budget&, const Budget&) = default;
};

/// log2-space interval [log2_lower, log2_upper] around a linear-extension count.
struct BoundedCount {
  double log2_lower = 0.0;
  double log2_upper = 0.0;
  bool exact = true;

  static BoundedCount exact_value(double log2_count) {
    return {log2_count, log2_count, true};
  }
  double width() const { return log2_upper - log2_lower; }
};

struct ExtCountStats {
  std::uint64_t nodes = 0;
  std::uint64_t memo_hits = 0;
  unsigned passes = 0;
  bool budget_exhausted = false;
};

namespace detail {

struct WordsHash {
  std::size_t operator()(const std::vector<std::uint64_t>& w) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto x : w) {
      h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// Recursive disjoint / minimal-element decomposition over vertex subsets of
// one poset. Exact sub-results are memoised per subset and shared across
// deepening passes.
class ExtensionBounder {
 public:
  struct Interval {
    double lo;
    double hi;
    bool exact;
  };

  ExtensionBounder(const Poset& poset, const Budget& budget)
      : n_(poset.size()), words_(words_for(poset.size())) {
    const Poset reduced =
        poset.edges().size() > poset.size() ? transitive_reduction(poset) : poset;
    succ_.resize(n_);
    pred_.resize(n_);
    for (const auto& [a, b] : reduced.edges()) {
      succ_[a].push_back(static_cast<std::uint32_t>(b));
      pred_[b].push_back(static_cast<std::uint32_t>(a));
    }
    node_limit_ = budget.node_limit;
    if (budget.time_limit) {
      deadline_ = std::chrono::steady_clock::now() + *budget.time_limit;
    }
    constexpr std::size_t kMemoBytes = std::size_t{64} << 20;
    memo_cap_ = std::max<std::size_t>(4096, kMemoBytes / (words_ * 8 + 64));
  }

  Interval pass(unsigned depth_limit) {
    depth_limit_ = depth_limit;
    ++stats_.passes;
    std::vector<std::uint32_t> all(n_);
    for (std::size_t i = 0; i < n_; ++i) all[i] = static_cast<std::uint32_t>(i);
    return run(all, 0);
  }

  bool exhausted() const { return stats_.budget_exhausted; }
  const ExtCountStats& stats() const { return stats_; }

 private:
  using Vertices = std::vector<std::uint32_t>;
  using Mask = std::vector<std::uint64_t>;

  static bool in(const Mask& m, std::uint32_t v) { return (m[v / 64] >> (v % 64)) & 1U; }

  Mask mask_of(const Vertices& vs) const {
    Mask m(words_, 0);
    for (auto v : vs) m[v / 64] |= std::uint64_t{1} << (v % 64);
    return m;
  }

  bool should_stop(unsigned depth) {
    if (depth >= depth_limit_) return true;
    if (node_limit_ && stats_.nodes > *node_limit_) {
      stats_.budget_exhausted = true;
      return true;
    }
    if (deadline_ && std::chrono::steady_clock::now() >= *deadline_) {
      stats_.budget_exhausted = true;
      return true;
    }
    return false;
  }

  std::vector<Vertices> components(const Vertices& vs, const Mask& mask) const {
    Mask unvisited = mask;
    std::vector<Vertices> out;
    Vertices stack;
    for (auto start : vs) {
      if (!in(unvisited, start)) continue;
      auto& comp = out.emplace_back();
      unvisited[start / 64] &= ~(std::uint64_t{1} << (start % 64));
      stack.push_back(start);
      while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        comp.push_back(v);
        auto visit = [&](std::uint32_t w) {
          if (in(unvisited, w)) {
            unvisited[w / 64] &= ~(std::uint64_t{1} << (w % 64));
            stack.push_back(w);
          }
        };
        for (auto w : succ_[v]) visit(w);
        for (auto w : pred_[v]) visit(w);
      }
      std::sort(comp.begin(), comp.end());
    }
    return out;
  }

  static Vertices difference(const Vertices& a, const Vertices& b) {
    Vertices out;
    out.reserve(a.size() - std::min(a.size(), b.size()));
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
    return out;
  }

  Interval finish(const Mask& key, std::size_t n, Interval r) {
    const double envelope = log2_factorial(n);
    r.lo = std::max(r.lo, 0.0);
    r.hi = std::min(r.hi, envelope);
    if (r.exact) {
      r.lo = r.hi = std::clamp(r.lo, 0.0, envelope);
      if (memo_.size() < memo_cap_) memo_.emplace(key, r.lo);
    } else {
      r.lo = std::min(r.lo, r.hi);
    }
    return r;
  }

  Interval run(const Vertices& vs, unsigned depth) {
    const std::size_t n = vs.size();
    if (n <= 1) return {0.0, 0.0, true};
    Mask key = mask_of(vs);
    if (auto it = memo_.find(key); it != memo_.end()) {
      ++stats_.memo_hits;
      return {it->second, it->second, true};
    }
    ++stats_.nodes;

    const bool has_edge = std::any_of(vs.begin(), vs.end(), [&](auto v) {
      return std::any_of(succ_[v].begin(), succ_[v].end(),
                         [&](auto w) { return in(key, w); });
    });
    if (!has_edge) {
      const double v = log2_factorial(n);
      return finish(key, n, {v, v, true});
    }
    if (should_stop(depth)) return {0.0, log2_factorial(n), false};

    auto comps = components(vs, key);
    if (comps.size() == 1) {
      std::vector<double> los;
      std::vector<double> his;
      bool exact = true;
      for (auto v : vs) {
        const bool minimal = std::none_of(pred_[v].begin(), pred_[v].end(),
                                          [&](auto u) { return in(key, u); });
        if (!minimal) continue;
        Vertices child;
        child.reserve(n - 1);
        for (auto w : vs) {
          if (w != v) child.push_back(w);
        }
        const auto r = run(child, depth + 1);
        los.push_back(r.lo);
        his.push_back(r.hi);
        exact = exact && r.exact;
      }
      return finish(key, n, {log_sum_exp2(los), log_sum_exp2(his), exact});
    }

    Vertices free;
    for (const auto& c : comps) {
      if (c.size() == 1) free.push_back(c.front());
    }
    std::sort(free.begin(), free.end());
    if (!free.empty()) {
      const std::size_t k = free.size();
      const auto rest = run(difference(vs, free), depth + 1);
      const double factor = log_choose(n, k) + log2_factorial(k);
      return finish(key, n,
                    {factor + rest.lo, factor + rest.hi, rest.exact});
    }
    const auto smallest = std::min_element(
        comps.begin(), comps.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    const Vertices block = *smallest;
    const auto first = run(block, depth + 1);
    const auto second = run(difference(vs, block), depth + 1);
    const double factor = log_choose(n, block.size());
    return finish(key, n,
                  {factor + first.lo + second.lo, factor + first.hi + second.hi,
                   first.exact && second.exact});
  }

  std::size_t n_;
  std::size_t words_;
  std::vector<std::vector<std::uint32_t>> succ_;
  std::vector<std::vector<std::uint32_t>> pred_;
  unsigned depth_limit_ = UINT_MAX;
  std::optional<std::uint64_t> node_limit_;
  std::optional<std::chrono::steady_clock::time_point> deadline_;
  std::unordered_map<Mask, double, WordsHash> memo_;
  std::size_t memo_cap_ = 0;
  ExtCountStats stats_;
};

}  // namespace detail

/// Budgeted bounds on |e(p)| by recursive decomposition:
///   edgeless         -> |G|! exactly
///   budget exhausted -> naive bounds (1, |G|!)
///   connected        -> sum over minimal elements x of bounds(G - x)
///   otherwise        -> C(|G|, k) * bounds(block) * bounds(rest), where the
///                       block is the free vertices if any, else the
///                       smallest component.
/// Time and node budgets drive iterative deepening (depth limit doubling);
/// the intersection of all pass intervals is returned.
inline BoundedCount bound_extensions(const Poset& p, const Budget& budget,
                                     ExtCountStats* stats = nullptr) {
  const std::size_t n = p.size();
  if (n <= 1) return BoundedCount::exact_value(0.0);

  detail::ExtensionBounder bounder(p, budget);
  detail::ExtensionBounder::Interval result{0.0, log2_factorial(n), false};
  const unsigned depth_cap = budget.depth_limit.value_or(UINT_MAX);
  if (!budget.time_limit && !budget.node_limit) {
    result = bounder.pass(depth_cap);
  } else {
    for (unsigned depth = 1;; depth *= 2) {
      const unsigned limit = std::min(depth, depth_cap);
      const auto r = bounder.pass(limit);
      if (r.exact) {
        result = r;
      } else if (!result.exact) {
        result.lo = std::max(result.lo, r.lo);
        result.hi = std::min(result.hi, r.hi);
      }
      if (result.exact || bounder.exhausted() || limit == depth_cap ||
          limit >= n) {
        break;
      }
    }
  }
  if (stats != nullptr) *stats = bounder.stats();
  return {result.lo, result.hi, result.exact};
}

}  // namespace ekgdisc
