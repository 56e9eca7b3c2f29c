#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ekgdisc/error.hpp"
#include "ekgdisc/event_table.hpp"
#include "ekgdisc/extcount.hpp"
#include "ekgdisc/relations.hpp"
#include "ekgdisc/scoring.hpp"

namespace ekgdisc {

enum class TieBreak { FewestThenLexicographic };

struct SearchConfig {
  /// Atomic features to search over; empty means every table feature.
  std::vector<std::string> candidate_features;
  Budget first_pass_budget = Budget::milliseconds(1000);
  double budget_growth = 4.0;
  unsigned max_passes = 16;
  unsigned workers = 1;
  TieBreak tie_break = TieBreak::FewestThenLexicographic;
  std::uint64_t seed = 0;
  /// Keep every pruned state (with the bound and incumbent at pruning time).
  bool record_pruned = false;
  /// Scores closer than this are treated as equal.
  double tolerance = 1e-9;
};

/// Node of the prefix-branching tree: children add one feature at a
/// position >= next_index of the fixed feature order.
struct SearchState {
  Model model;
  std::size_t next_index = 0;
};

/// The union of every model reachable from `state` (M*).
inline Model reachable_union(const SearchState& state,
                             std::span<const std::string> feature_order) {
  Model out = state.model;
  for (std::size_t p = state.next_index; p < feature_order.size(); ++p) {
    out.insert(FeatureSet(feature_order[p]));
  }
  return out;
}

enum class Decision { Prune, Expand };

struct TraceEntry {
  double elapsed_ms = 0.0;
  double best_score = 0.0;
  Model model;
};

struct PrunedRecord {
  SearchState state;
  double bound = 0.0;
  double best_score = 0.0;
};

struct PendingModel {
  Model model;
  LogScore score;
};

struct SearchCounters {
  std::uint64_t visited = 0;
  std::uint64_t pruned = 0;
  std::uint64_t enqueued = 0;
  std::uint64_t reestimated = 0;
  std::uint64_t dismissed = 0;
  unsigned passes = 0;
};

struct DiscoveryResult {
  Model best_model;
  LogScore best_score;
  std::vector<TraceEntry> trace;
  SearchCounters counters;
  std::vector<std::string> feature_order;
  std::vector<std::string> diagnostics;
  std::vector<PrunedRecord> pruned;
  /// False when re-estimation passes ran out with models still undecided.
  bool resolved = true;
};

/// Orders candidates by descending normalised entropy, ties by name.
inline std::vector<std::string> entropy_feature_order(Scorer& scorer,
                                                      std::vector<std::string> names) {
  std::vector<std::pair<double, std::string>> keyed;
  for (auto& n : names) {
    scorer.table().require_feature(n);
    keyed.emplace_back(scorer.entropy(FeatureSet(n)), std::move(n));
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  for (auto& k : keyed) out.push_back(std::move(k.second));
  return out;
}

/// Branch-and-bound over atomic-feature models. Owns the incumbent, the
/// pruning threshold and the re-estimation queue.
class BranchAndBound {
 public:
  BranchAndBound(Scorer& scorer, SearchConfig config)
      : scorer_(&scorer), config_(std::move(config)),
        start_(std::chrono::steady_clock::now()) {
    std::vector<std::string> names = config_.candidate_features;
    if (names.empty()) {
      names.assign(scorer.table().features().begin(), scorer.table().features().end());
    }
    std::set<std::string> unique(names.begin(), names.end());
    if (unique.size() != names.size()) {
      throw Error(ErrorCode::InvalidArgument, "duplicate candidate feature");
    }
    if (names.empty()) {
      throw Error(ErrorCode::NoCandidates, "no candidate features to search");
    }
    order_ = entropy_feature_order(scorer, std::move(names));
    // Any model holding a zero-entropy feature has prior zero, so such
    // features never appear in a winning model. Dropping them keeps them
    // out of every M* as well, which tightens the pruning bound.
    while (!order_.empty() && scorer.entropy(FeatureSet(order_.back())) <= 0.0) {
      skipped_.insert(skipped_.begin(), order_.back());
      order_.pop_back();
    }

    // The empty model's poset is edgeless, so its score is exact.
    incumbent_score_ = scorer.score(Model{}, Budget::unbounded());
    best_ = incumbent_score_.score_hi;
    trace_.push_back({elapsed_ms(), best_, incumbent_});
  }

  std::span<const std::string> feature_order() const { return order_; }
  std::span<const std::string> skipped_features() const { return skipped_; }
  double best_score() const { return best_; }
  const Model& best_model() const { return incumbent_; }
  const LogScore& best_model_score() const { return incumbent_score_; }
  std::span<const PendingModel> queue() const { return queue_; }
  const SearchCounters& counters() const { return counters_; }
  std::span<const PrunedRecord> pruned() const { return pruned_; }
  std::span<const TraceEntry> trace() const { return trace_; }

  /// Raises the pruning threshold; it never decreases.
  void raise_best_score(double value) { best_ = std::max(best_, value); }

  /// Prunes the subtree under `state` if even its most restrictive
  /// reachable poset cannot beat the incumbent; otherwise scores the
  /// state's own model and files it as best, pending or discarded.
  Decision expand_or_prune(const SearchState& state, const Budget& budget) {
    ++counters_.visited;
    const double tol = config_.tolerance;
    const double log_prior = scorer_->log2_prior(state.model);
    const Model reachable = reachable_union(state, order_);

    double bound = kNegInf;
    std::vector<BoundedCount> reachable_counts;
    if (log_prior != kNegInf) {
      reachable_counts = scorer_->bound_counts(reachable, budget);
      bound = log_prior;
      for (const auto& c : reachable_counts) bound -= c.log2_lower;
    }
    if (bound < best_ - tol) {
      ++counters_.pruned;
      if (config_.record_pruned) pruned_.push_back({state, bound, best_});
      return Decision::Prune;
    }

    auto counts = reachable == state.model
                      ? std::move(reachable_counts)
                      : scorer_->bound_counts(state.model, budget);
    consider(state.model,
             compose_score(log_prior, std::move(counts), scorer_->digest()));
    return Decision::Expand;
  }

  /// Re-scores every queued model with `budget`. Models already beaten by
  /// the threshold are dismissed without recomputation. Returns the number
  /// still pending.
  std::size_t reestimate_pass(const Budget& budget) {
    ++counters_.passes;
    auto current = std::move(queue_);
    queue_.clear();
    const double tol = config_.tolerance;
    for (auto& item : current) {
      if (item.score.score_hi < best_ - tol) {
        ++counters_.dismissed;
        continue;
      }
      ++counters_.reestimated;
      auto counts = scorer_->bound_counts(item.model, budget);
      for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto& old = item.score.counts[i];
        if (counts[i].exact) continue;
        if (old.exact) {
          counts[i] = old;
        } else {
          counts[i].log2_lower = std::max(counts[i].log2_lower, old.log2_lower);
          counts[i].log2_upper = std::min(counts[i].log2_upper, old.log2_upper);
        }
      }
      consider(item.model, compose_score(item.score.log2_prior, std::move(counts),
                                         scorer_->digest()));
    }
    return queue_.size();
  }

  DiscoveryResult run() {
    std::deque<SearchState> frontier;
    frontier.push_back(SearchState{});
    while (!frontier.empty()) {
      SearchState state = std::move(frontier.front());
      frontier.pop_front();
      if (expand_or_prune(state, config_.first_pass_budget) == Decision::Prune) {
        continue;
      }
      for (std::size_t p = state.next_index; p < order_.size(); ++p) {
        SearchState child{state.model, p + 1};
        child.model.insert(FeatureSet(order_[p]));
        frontier.push_back(std::move(child));
      }
    }

    Budget budget = config_.first_pass_budget;
    for (unsigned pass = 0; pass < config_.max_passes && !queue_.empty(); ++pass) {
      budget = budget.scaled(config_.budget_growth);
      reestimate_pass(budget);
    }

    DiscoveryResult result;
    result.best_model = incumbent_;
    result.best_score = incumbent_score_;
    result.trace = trace_;
    result.counters = counters_;
    result.feature_order = order_;
    result.pruned = pruned_;
    result.resolved = queue_.empty();
    if (!result.resolved) {
      result.diagnostics.push_back(
          std::to_string(queue_.size()) +
          " model(s) still undecided after the last re-estimation pass");
    }
    if (order_.empty()) {
      result.diagnostics.push_back(
          "every candidate feature has zero entropy; only the empty model has a "
          "finite score");
    } else {
      for (const auto& f : skipped_) {
        result.diagnostics.push_back("feature " + f + " has zero entropy and was skipped");
      }
    }
    return result;
  }

 private:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start_)
        .count();
  }

  void promote(const Model& model, LogScore score) {
    // Ties may differ in the last bits; keep the recorded best nondecreasing.
    const double kept = std::max(score.score_hi, incumbent_score_.score_hi);
    score.score_lo = score.score_hi = kept;
    incumbent_ = model;
    incumbent_score_ = std::move(score);
    trace_.push_back({elapsed_ms(), kept, incumbent_});
  }

  void enqueue(const Model& model, LogScore score) {
    ++counters_.enqueued;
    queue_.push_back({model, std::move(score)});
  }

  void consider(const Model& model, LogScore score) {
    const double tol = config_.tolerance;
    if (score.score_hi == kNegInf) return;
    if (score.exact) {
      const double v = score.score_hi;
      const double inc = incumbent_score_.score_hi;
      if (v > best_ + tol) {
        best_ = v;
        promote(model, std::move(score));
      } else if (v >= best_ - tol) {
        if (v > inc + tol ||
            (std::abs(v - inc) <= tol && tie_break_prefers(model, incumbent_))) {
          promote(model, std::move(score));
        }
      }
      return;
    }
    if (score.score_lo > best_ + tol) {
      best_ = score.score_lo;
      enqueue(model, std::move(score));
    } else if (score.score_hi >= best_ - tol) {
      enqueue(model, std::move(score));
    }
  }

  Scorer* scorer_;
  SearchConfig config_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> order_;
  std::vector<std::string> skipped_;
  double best_ = kNegInf;
  Model incumbent_;
  LogScore incumbent_score_;
  std::vector<PendingModel> queue_;
  std::vector<TraceEntry> trace_;
  std::vector<PrunedRecord> pruned_;
  SearchCounters counters_;
};

/// Finds the best-scoring atomic-feature model for the samples.
inline DiscoveryResult discover(const EventTable& table,
                                std::span<const Observation> samples,
                                const SearchConfig& config) {
  if (samples.empty()) {
    throw Error(ErrorCode::InvalidArgument, "discovery needs at least one sample");
  }
  Scorer scorer(table, std::vector<Observation>(samples.begin(), samples.end()),
                std::max(1U, config.workers));
  BranchAndBound search(scorer, config);
  return search.run();
}

}  // namespace ekgdisc
