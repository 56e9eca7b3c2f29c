#pragma once

// Brute-force reference implementations for small instances. Everything
// here recomputes from first principles and shares no counting or search
// code with the production path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ekgdisc/error.hpp"
#include "ekgdisc/event_table.hpp"
#include "ekgdisc/extcount.hpp"
#include "ekgdisc/poset.hpp"
#include "ekgdisc/relations.hpp"
#include "ekgdisc/scoring.hpp"
#include "ekgdisc/search.hpp"

namespace ekgdisc::oracle {

inline constexpr std::size_t kBruteForceCeiling = 8;
inline constexpr std::size_t kExhaustiveFeatureCeiling = 6;

/// log2 of a non-negative big integer (-inf for zero).
inline double log2_big(const BigCount& value) {
  if (value <= 0) return kNegInf;
  const std::size_t top = boost::multiprecision::msb(value);
  if (top < 63) return std::log2(static_cast<double>(value.convert_to<std::uint64_t>()));
  const std::size_t shift = top - 62;
  const BigCount head = value >> shift;
  return std::log2(static_cast<double>(head.convert_to<std::uint64_t>())) +
         static_cast<double>(shift);
}

/// Counts permutations of 0..n-1 that respect every closure pair.
inline BigCount brute_count_extensions(const Poset& p) {
  const std::size_t n = p.size();
  if (n > kBruteForceCeiling) {
    throw Error(ErrorCode::LimitExceeded, "brute force limited to 8 elements");
  }
  const auto reach = p.closure();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> pos(n);
  std::uint64_t count = 0;
  do {
    for (std::size_t i = 0; i < n; ++i) pos[perm[i]] = i;
    bool ok = true;
    for (std::size_t a = 0; a < n && ok; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (reach.test(a, b) && pos[a] > pos[b]) {
          ok = false;
          break;
        }
      }
    }
    if (ok) ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return BigCount(count);
}

inline bool shares_value(const EventTable& table, std::size_t feature, std::size_t a,
                         std::size_t b) {
  const auto x = table.value_strings(a, feature);
  const auto y = table.value_strings(b, feature);
  for (const auto& v : x) {
    if (std::find(y.begin(), y.end(), v) != y.end()) return true;
  }
  return false;
}

using PairSet = std::set<EventPair>;

/// Unordered pairs (a <= b, reflexive pairs included) of the atomic relation.
inline PairSet naive_atomic_pairs(const EventTable& table, std::size_t feature) {
  PairSet out;
  for (std::size_t a = 0; a < table.size(); ++a) {
    for (std::size_t b = a; b < table.size(); ++b) {
      if (shares_value(table, feature, a, b)) out.emplace(a, b);
    }
  }
  return out;
}

/// Derived relation by exhaustive scan over every (a, b, c, d, Xj).
inline PairSet naive_derived_pairs(const EventTable& table, std::size_t fi,
                                   std::size_t fk) {
  PairSet out;
  const std::size_t n = table.size();
  auto related = [&](std::size_t a, std::size_t d) {
    if (shares_value(table, fi, a, d) || shares_value(table, fk, a, d)) return true;
    for (std::size_t j = 0; j < table.num_features(); ++j) {
      if (j == fi || j == fk) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (!shares_value(table, fi, a, b)) continue;
        for (std::size_t c = 0; c < n; ++c) {
          if (c == b) continue;
          if (shares_value(table, j, b, c) && shares_value(table, fk, c, d)) return true;
        }
      }
    }
    return false;
  };
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t d = 0; d < n; ++d) {
      if (related(a, d)) out.emplace(std::min(a, d), std::max(a, d));
    }
  }
  return out;
}

/// Same pair convention as the naive relations, from a production relation.
inline PairSet relation_pairs(const SymmetricRelation& rel) {
  PairSet out;
  for (auto p : rel.pairs()) out.insert(p);
  for (auto e : rel.participants()) out.emplace(e, e);
  return out;
}

/// Exact score with downset-DP counts: log2 prior - sum log2 |e(P_i)|.
inline double exact_score(const EventTable& table, std::span<const Observation> samples,
                          const Model& model) {
  double log_prior = 0.0;
  for (const auto& set : model) {
    const double eta = normalized_entropy(table, set);
    if (eta <= 0.0) return kNegInf;
    log_prior += std::log2(eta);
  }
  double total = log_prior;
  for (const auto& obs : samples) {
    std::vector<Edge> edges;
    const auto members = obs.members();
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x + 1; y < members.size(); ++y) {
        for (const auto& set : model) {
          const auto names = set.members();
          bool rel = false;
          if (set.is_atomic()) {
            rel = shares_value(table, table.require_feature(names[0]), members[x],
                               members[y]);
          } else {
            const auto pairs = naive_derived_pairs(table, table.require_feature(names[0]),
                                                   table.require_feature(names[1]));
            rel = pairs.count({members[x], members[y]}) > 0;
          }
          if (rel) {
            edges.emplace_back(x, y);
            break;
          }
        }
      }
    }
    total -= log2_big(count_extensions_exact(Poset(members.size(), std::move(edges))));
  }
  return total;
}

struct ExhaustiveResult {
  Model model;
  double score = kNegInf;
};

/// All models built from subsets of `candidates` (atomic sets), scored with
/// exact counts; ties resolved like the search.
inline ExhaustiveResult exhaustive_best_model(const EventTable& table,
                                              std::span<const Observation> samples,
                                              std::span<const std::string> candidates,
                                              double tolerance = 1e-9) {
  if (candidates.size() > kExhaustiveFeatureCeiling) {
    throw Error(ErrorCode::LimitExceeded, "exhaustive search limited to 6 features");
  }
  for (const auto& obs : samples) {
    if (obs.size() > kDefaultExactCeiling) {
      throw Error(ErrorCode::LimitExceeded, "sample exceeds the exact counting ceiling");
    }
  }
  ExhaustiveResult best;
  for (std::uint32_t mask = 0; mask < (1U << candidates.size()); ++mask) {
    Model m;
    for (std::size_t f = 0; f < candidates.size(); ++f) {
      if (mask & (1U << f)) m.insert(FeatureSet(candidates[f]));
    }
    const double s = exact_score(table, samples, m);
    if (s == kNegInf) continue;
    if (best.score == kNegInf || s > best.score + tolerance ||
        (std::abs(s - best.score) <= tolerance && tie_break_prefers(m, best.model))) {
      best = {m, s};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Random small instances.

inline Poset random_poset(std::mt19937_64& rng, std::size_t n, double density) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::bernoulli_distribution coin(std::clamp(density, 0.0, 1.0));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.emplace_back(perm[i], perm[j]);
    }
  }
  return Poset(n, std::move(edges));
}

/// Weakly connected random poset: a random spanning tree oriented along a
/// random linear order, plus extra edges with probability `density`.
inline Poset random_connected_poset(std::mt19937_64& rng, std::size_t n, double density) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[perm[i]] = i;
  std::set<Edge> edges;
  auto add = [&](std::size_t a, std::size_t b) {
    if (rank[a] > rank[b]) std::swap(a, b);
    edges.emplace(a, b);
  };
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> pick(0, v - 1);
    add(v, pick(rng));
  }
  std::bernoulli_distribution coin(std::clamp(density, 0.0, 1.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (coin(rng)) add(a, b);
    }
  }
  return Poset(n, std::vector<Edge>(edges.begin(), edges.end()));
}

struct RandomTableSpec {
  std::size_t events = 8;
  std::size_t features = 3;
  std::size_t values_per_feature = 3;
  double empty_probability = 0.2;
  double multi_probability = 0.1;
};

inline EventTable random_table(std::mt19937_64& rng, const RandomTableSpec& spec) {
  std::vector<std::string> ids;
  std::vector<std::string> features;
  for (std::size_t e = 0; e < spec.events; ++e) ids.push_back("e" + std::to_string(e + 1));
  for (std::size_t f = 0; f < spec.features; ++f) features.push_back("f" + std::to_string(f));
  std::uniform_int_distribution<std::size_t> value(0, std::max<std::size_t>(1, spec.values_per_feature) - 1);
  std::bernoulli_distribution empty(spec.empty_probability);
  std::bernoulli_distribution multi(spec.multi_probability);
  std::vector<std::vector<std::vector<std::string>>> cells(spec.events);
  for (auto& row : cells) {
    for (std::size_t f = 0; f < spec.features; ++f) {
      auto& cell = row.emplace_back();
      if (empty(rng)) continue;
      cell.push_back("v" + std::to_string(value(rng)));
      if (multi(rng)) cell.push_back("v" + std::to_string(value(rng)));
    }
  }
  return EventTable(std::move(ids), std::move(features), cells);
}

// ---------------------------------------------------------------------------
// Agreement suite for the CLI's verify mode.

struct OracleReport {
  std::string instance;
  std::string oracle_value;
  std::string system_value;
  bool agree = false;
  double discrepancy = 0.0;
};

inline std::string to_decimal(const BigCount& v) { return v.str(); }

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline std::vector<OracleReport> run_verification_suite(std::uint64_t seed,
                                                        std::size_t trials) {
  std::mt19937_64 rng(seed);
  std::vector<OracleReport> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng() % kBruteForceCeiling;
    const double density = unit(rng);
    const Poset p = random_poset(rng, n, density);
    const BigCount brute = brute_count_extensions(p);
    const BigCount dp = count_extensions_exact(p);
    out.push_back({"count n=" + std::to_string(n) + " density=" + format_double(density),
                   to_decimal(brute), to_decimal(dp), brute == dp,
                   std::abs(log2_big(brute) - log2_big(dp))});
  }

  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng() % 12;
    const double density = unit(rng);
    const Poset p = random_poset(rng, n, density);
    const double truth = log2_big(count_extensions_exact(p));
    const auto bound = bound_extensions(p, Budget::unbounded());
    const double diff = std::max(std::abs(bound.log2_lower - truth),
                                 std::abs(bound.log2_upper - truth));
    out.push_back({"bounds n=" + std::to_string(n) + " density=" + format_double(density),
                   format_double(truth),
                   "[" + format_double(bound.log2_lower) + ", " +
                       format_double(bound.log2_upper) + "]",
                   bound.exact && diff <= 1e-6, diff});
  }

  for (std::size_t t = 0; t < trials; ++t) {
    RandomTableSpec spec;
    spec.events = 3 + rng() % 6;
    spec.features = 2 + rng() % 3;
    const EventTable table = random_table(rng, spec);
    const std::size_t fi = rng() % spec.features;
    const std::size_t fk = (fi + 1 + rng() % (spec.features - 1)) % spec.features;
    const auto naive = naive_derived_pairs(table, fi, fk);
    const auto fast = relation_pairs(
        derived_relation(table, fi, fk, detail::full_domain(table)));
    out.push_back({"derived |E|=" + std::to_string(spec.events) + " f" +
                       std::to_string(fi) + "+f" + std::to_string(fk),
                   std::to_string(naive.size()) + " pairs",
                   std::to_string(fast.size()) + " pairs", naive == fast,
                   naive == fast ? 0.0 : 1.0});
  }

  for (std::size_t t = 0; t < trials; ++t) {
    RandomTableSpec spec;
    spec.events = 3 + rng() % 6;
    spec.features = 1 + rng() % 4;
    const EventTable table = random_table(rng, spec);
    std::vector<Observation> samples{
        Observation(table, detail::full_domain(table))};
    SearchConfig config;
    config.first_pass_budget = Budget::unbounded();
    const auto found = discover(table, samples, config);
    std::vector<std::string> names(table.features().begin(), table.features().end());
    const auto reference = exhaustive_best_model(table, samples, names);
    const double diff = std::abs(found.best_score.score_hi - reference.score);
    out.push_back({"search |E|=" + std::to_string(spec.events) +
                       " features=" + std::to_string(spec.features),
                   reference.model.label() + " " + format_double(reference.score),
                   found.best_model.label() + " " +
                       format_double(found.best_score.score_hi),
                   diff <= 1e-6, diff});
  }
  return out;
}

}  // namespace ekgdisc::oracle
