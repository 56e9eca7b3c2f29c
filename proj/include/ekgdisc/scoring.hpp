#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "ekgdisc/detail/parallel.hpp"
#include "ekgdisc/error.hpp"
#include "ekgdisc/event_table.hpp"
#include "ekgdisc/extcount.hpp"
#include "ekgdisc/log_math.hpp"
#include "ekgdisc/poset.hpp"
#include "ekgdisc/relations.hpp"

namespace ekgdisc {

/// Shannon entropy (bits) of the feature set's empirical outcome
/// distribution, divided by 1 + log2 |E|. An event's outcome is its whole
/// value set (the empty set included); a derived set uses the pair.
inline double normalized_entropy(const EventTable& table, const FeatureSet& set) {
  std::vector<std::size_t> features;
  for (const auto& name : set.members()) features.push_back(table.require_feature(name));

  std::map<std::vector<std::uint64_t>, std::size_t> outcomes;
  for (std::size_t e = 0; e < table.size(); ++e) {
    std::vector<std::uint64_t> key;
    for (std::size_t f : features) {
      for (ValueId v : table.values(e, f)) key.push_back(v);
      key.push_back(std::numeric_limits<std::uint64_t>::max());
    }
    ++outcomes[key];
  }
  const double total = static_cast<double>(table.size());
  double entropy = 0.0;
  for (const auto& [key, count] : outcomes) {
    const double p = static_cast<double>(count) / total;
    entropy -= p * std::log2(p);
  }
  // -0.0 for a single outcome; normalise the sign.
  if (entropy <= 0.0) return 0.0;
  return entropy / (1.0 + std::log2(total));
}

/// log2 of the prior numerator: sum of log2 eta over the model's sets.
inline double model_prior_unnormalized(const EventTable& table, const Model& model) {
  double log_prior = 0.0;
  for (const auto& set : model) {
    const double eta = normalized_entropy(table, set);
    if (eta <= 0.0) return kNegInf;
    log_prior += std::log2(eta);
  }
  return log_prior;
}

/// Unnormalised log2 posterior interval: log2 prior plus the summed
/// per-sample log2 likelihood bounds (likelihood = 1 / |e(P)|).
struct LogScore {
  double log2_prior = 0.0;
  double log2_likelihood_lower = 0.0;
  double log2_likelihood_upper = 0.0;
  double score_lo = 0.0;
  double score_hi = 0.0;
  bool exact = true;
  std::uint64_t samples_digest = 0;
  std::vector<BoundedCount> counts;
};

/// FNV-1a over the sample member lists; identifies a sample set.
inline std::uint64_t samples_digest(std::span<const Observation> samples) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xFFU;
      h *= 1099511628211ULL;
    }
  };
  mix(samples.size());
  for (const auto& s : samples) {
    mix(s.size());
    for (std::size_t m : s.members()) mix(m);
  }
  return h;
}

inline LogScore compose_score(double log2_prior, std::vector<BoundedCount> counts,
                              std::uint64_t digest) {
  LogScore s;
  s.log2_prior = log2_prior;
  s.samples_digest = digest;
  for (const auto& c : counts) {
    s.log2_likelihood_lower -= c.log2_upper;
    s.log2_likelihood_upper -= c.log2_lower;
    s.exact = s.exact && c.exact;
  }
  s.counts = std::move(counts);
  if (log2_prior == kNegInf) {
    s.score_lo = s.score_hi = kNegInf;
  } else {
    s.score_lo = log2_prior + s.log2_likelihood_lower;
    s.score_hi = log2_prior + s.log2_likelihood_upper;
    if (s.exact) s.score_lo = s.score_hi;
  }
  return s;
}

/// Scores models against a fixed sample set. Relations are cached per
/// sample and entropies per feature set; per-sample counting fans out to
/// `workers` threads with results assembled in sample order.
class Scorer {
 public:
  Scorer(const EventTable& table, std::vector<Observation> samples,
         unsigned workers = 1)
      : table_(&table), samples_(std::move(samples)), workers_(workers) {
    if (samples_.empty()) {
      throw Error(ErrorCode::InvalidArgument, "scoring needs at least one sample");
    }
    for (const auto& s : samples_) {
      if (&s.parent() != table_) {
        throw Error(ErrorCode::MismatchedSamples,
                    "sample does not belong to the scored table");
      }
      caches_.push_back(std::make_unique<RelationCache>(s));
    }
    digest_ = samples_digest(samples_);
  }

  const EventTable& table() const { return *table_; }
  std::span<const Observation> samples() const { return samples_; }
  std::uint64_t digest() const { return digest_; }
  unsigned workers() const { return workers_; }

  double entropy(const FeatureSet& set) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = entropy_.find(set); it != entropy_.end()) return it->second;
    }
    const double eta = normalized_entropy(*table_, set);
    std::lock_guard lock(mutex_);
    entropy_.emplace(set, eta);
    return eta;
  }

  double log2_prior(const Model& model) {
    double log_prior = 0.0;
    for (const auto& set : model) {
      const double eta = entropy(set);
      if (eta <= 0.0) return kNegInf;
      log_prior += std::log2(eta);
    }
    return log_prior;
  }

  Poset poset(std::size_t sample, const Model& model, bool tag_edges = false) {
    return build_poset(samples_.at(sample), model, *caches_.at(sample), tag_edges);
  }

  std::vector<BoundedCount> bound_counts(const Model& model, const Budget& budget) {
    std::vector<BoundedCount> counts(samples_.size());
    detail::parallel_for(samples_.size(), workers_, [&](std::size_t i) {
      counts[i] = bound_extensions(poset(i, model), budget);
    });
    return counts;
  }

  LogScore score(const Model& model, const Budget& budget) {
    return compose_score(log2_prior(model), bound_counts(model, budget), digest_);
  }

 private:
  const EventTable* table_;
  std::vector<Observation> samples_;
  unsigned workers_;
  std::vector<std::unique_ptr<RelationCache>> caches_;
  std::uint64_t digest_ = 0;
  std::mutex mutex_;
  std::map<FeatureSet, double> entropy_;
};

inline LogScore score_model(const EventTable& table,
                            std::span<const Observation> samples,
                            const Model& model, const Budget& budget,
                            unsigned workers = 1) {
  Scorer scorer(table, std::vector<Observation>(samples.begin(), samples.end()),
                workers);
  return scorer.score(model, budget);
}

/// Interval on log2 P(M1|D) - log2 P(M2|D).
struct OddsInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool first_more_probable() const { return lo > 0.0; }
  bool second_more_probable() const { return hi < 0.0; }
  bool undecided() const { return !first_more_probable() && !second_more_probable(); }
};

inline OddsInterval posterior_log_odds(const LogScore& first, const LogScore& second) {
  if (first.samples_digest != second.samples_digest) {
    throw Error(ErrorCode::MismatchedSamples,
                "posterior odds need scores over the same samples");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const bool first_zero = first.score_hi == kNegInf;
  const bool second_zero = second.score_hi == kNegInf;
  if (first_zero && second_zero) return {-inf, inf};
  if (first_zero) return {-inf, -inf};
  if (second_zero) return {inf, inf};
  return {first.score_lo - second.score_hi, first.score_hi - second.score_lo};
}

}  // namespace ekgdisc
