#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace ekgdisc;
using Catch::Matchers::WithinAbs;

namespace {

SearchConfig exact_config(std::vector<std::string> features = {}) {
  SearchConfig c;
  c.candidate_features = std::move(features);
  c.first_pass_budget = Budget::unbounded();
  return c;
}

// 16 events; "Entity" cycles through four values so it forms four
// interleaved 4-chains. The noise columns draw from many values.
EventTable planted_log(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> ids;
  std::vector<std::vector<std::vector<std::string>>> cells;
  for (std::size_t e = 0; e < 16; ++e) {
    ids.push_back("e" + std::to_string(e));
    auto& row = cells.emplace_back();
    row.push_back({"ent" + std::to_string(e % 4)});
    for (int n = 0; n < 3; ++n) row.push_back({"v" + std::to_string(rng() % 12)});
  }
  return EventTable(std::move(ids), {"Entity", "NoiseA", "NoiseB", "NoiseC"}, cells);
}

}  // namespace

TEST_CASE("reachable union examples", "[search]") {
  const std::vector<std::string> order{"f0", "f1", "f2", "f3"};
  CHECK(reachable_union(SearchState{}, order) ==
        Model{FeatureSet("f0"), FeatureSet("f1"), FeatureSet("f2"), FeatureSet("f3")});
  const SearchState leaf{Model{FeatureSet("f1")}, 4};
  CHECK(reachable_union(leaf, order) == leaf.model);
  CHECK(reachable_union(SearchState{Model{FeatureSet("f1")}, 2}, order) ==
        Model{FeatureSet("f1"), FeatureSet("f2"), FeatureSet("f3")});
}

TEST_CASE("feature order is by descending entropy then name", "[search]") {
  const auto t = ekgtest::entropy_toy();
  Scorer scorer(t, {ekgtest::full_sample(t)});
  CHECK(entropy_feature_order(scorer, {"X4", "X1", "X3", "X2"}) ==
        std::vector<std::string>{"X2", "X3", "X4", "X1"});
}

TEST_CASE("toy table: search matches exhaustive enumeration", "[search]") {
  const auto t = ekgtest::entropy_toy();
  const std::vector<Observation> samples{ekgtest::full_sample(t)};
  const auto result = discover(t, samples, exact_config());
  const std::vector<std::string> names{"X1", "X2", "X3", "X4"};
  const auto reference = oracle::exhaustive_best_model(t, samples, names);
  CHECK(result.best_score.exact);
  CHECK_THAT(result.best_score.score_hi, WithinAbs(reference.score, 1e-9));
  CHECK(result.best_model == reference.model);
  CHECK(result.resolved);
  CHECK(result.feature_order == std::vector<std::string>{"X2", "X3", "X4"});
}

TEST_CASE("zero-entropy candidates leave the empty model", "[search]") {
  const auto t = ekgtest::entropy_toy();
  const std::vector<Observation> samples{ekgtest::full_sample(t)};
  const auto result = discover(t, samples, exact_config({"X1"}));
  CHECK(result.best_model.empty());
  CHECK_THAT(result.best_score.score_hi, WithinAbs(-log2_factorial(8), 1e-9));
  REQUIRE_FALSE(result.diagnostics.empty());
  CHECK_THAT(result.diagnostics.front(), Catch::Matchers::ContainsSubstring("zero entropy"));
}

TEST_CASE("candidate validation", "[search]") {
  const auto t = ekgtest::entropy_toy();
  const std::vector<Observation> samples{ekgtest::full_sample(t)};
  CHECK_THROWS_AS(discover(t, samples, exact_config({"X2", "X2"})), Error);
  CHECK_THROWS_AS(discover(t, samples, exact_config({"Nope"})), Error);
  CHECK_THROWS_AS(discover(t, {}, exact_config()), Error);
  try {
    EventTable bare({"a", "b"}, {}, std::vector<std::vector<std::vector<std::string>>>(2));
    discover(bare, std::vector<Observation>{ekgtest::full_sample(bare)}, exact_config());
    FAIL("expected NoCandidates");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoCandidates);
  }
}

TEST_CASE("planted entity column is discovered", "[search]") {
  const auto t = planted_log(5);
  const auto samples = sample_observations(t, 2, 8, 0, SamplingScheme::Partition);
  const std::vector<std::string> names{"Entity", "NoiseA", "NoiseB", "NoiseC"};
  const auto reference = oracle::exhaustive_best_model(t, samples, names);
  REQUIRE(reference.model.contains(FeatureSet("Entity")));
  const auto result = discover(t, samples, exact_config());
  CHECK(result.best_model.contains(FeatureSet("Entity")));
  CHECK(result.best_model == reference.model);
}

TEST_CASE("prune predicate on the toy table", "[search]") {
  const auto t = ekgtest::entropy_toy();
  Scorer scorer(t, {ekgtest::full_sample(t)});
  auto config = exact_config({"X2", "X3", "X4"});
  const SearchState state{Model{FeatureSet("X3")}, 2};
  const auto star = build_poset(scorer.samples()[0], Model{FeatureSet("X3"), FeatureSet("X4")});
  const double bound = std::log2(0.375) - oracle::log2_big(count_extensions_exact(star));

  {
    BranchAndBound search(scorer, config);
    REQUIRE(search.best_score() < bound);
    search.raise_best_score(bound + 1e-3);
    const auto queue_before = search.queue().size();
    const auto best_model = search.best_model();
    CHECK(search.expand_or_prune(state, Budget::unbounded()) == Decision::Prune);
    CHECK(search.queue().size() == queue_before);
    CHECK(search.best_model() == best_model);
    CHECK(search.counters().pruned == 1);
  }
  {
    BranchAndBound search(scorer, config);
    search.raise_best_score(bound - 1e-3);
    CHECK(search.expand_or_prune(state, Budget::unbounded()) == Decision::Expand);
  }
}

TEST_CASE("exact improvement updates the incumbent", "[search]") {
  const auto t = ekgtest::entropy_toy();
  Scorer scorer(t, {ekgtest::full_sample(t)});
  BranchAndBound search(scorer, exact_config());
  const double before = search.best_score();
  const SearchState leaf{Model{FeatureSet("X2")}, 3};
  CHECK(search.expand_or_prune(leaf, Budget::unbounded()) == Decision::Expand);
  CHECK(search.best_model() == leaf.model);
  CHECK(search.best_score() > before);
  CHECK_THAT(search.best_score(), WithinAbs(std::log2(0.5) - std::log2(2520.0), 1e-9));
  CHECK(search.trace().size() == 2);
}

TEST_CASE("re-estimation resolves or dismisses queued models", "[search]") {
  const auto t = ekgtest::synthetic_log(13, 40, 4);
  Scorer scorer(t, {ekgtest::full_sample(t)});
  SearchConfig config = exact_config();
  const SearchState leaf{Model{FeatureSet("F0")}, 4};

  {
    BranchAndBound search(scorer, config);
    CHECK(search.expand_or_prune(leaf, Budget::nodes(0)) == Decision::Expand);
    REQUIRE(search.queue().size() == 1);
    CHECK_FALSE(search.queue()[0].score.exact);
    search.reestimate_pass(Budget::unbounded());
    CHECK(search.queue().empty());
    CHECK(search.counters().reestimated == 1);
  }
  {
    BranchAndBound search(scorer, config);
    search.expand_or_prune(leaf, Budget::nodes(0));
    REQUIRE(search.queue().size() == 1);
    search.raise_best_score(search.queue()[0].score.score_hi + 1.0);
    search.reestimate_pass(Budget::unbounded());
    CHECK(search.queue().empty());
    CHECK(search.counters().dismissed == 1);
    CHECK(search.counters().reestimated == 0);
  }
  {
    BranchAndBound search(scorer, config);
    search.expand_or_prune(leaf, Budget::nodes(0));
    REQUIRE(search.queue().size() == 1);
    const auto wide = search.queue()[0].score;
    search.reestimate_pass(Budget::nodes(3));
    if (!search.queue().empty()) {
      const auto& narrowed = search.queue()[0].score;
      CHECK(narrowed.score_lo >= wide.score_lo);
      CHECK(narrowed.score_hi <= wide.score_hi);
    }
  }
}

TEST_CASE("search agrees with the exhaustive oracle on random instances", "[search][property]") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 60; ++trial) {
    oracle::RandomTableSpec spec;
    spec.events = 3 + rng() % 8;
    spec.features = 1 + rng() % 5;
    spec.values_per_feature = 2 + rng() % 3;
    const auto t = oracle::random_table(rng, spec);
    const auto samples = sample_observations(t, 1 + rng() % 2, 2 + rng() % (t.size() - 1),
                                             rng(), SamplingScheme::ContiguousWindow);
    auto config = exact_config();
    config.record_pruned = true;
    const auto result = discover(t, samples, config);
    const std::vector<std::string> names(t.features().begin(), t.features().end());
    const auto reference = oracle::exhaustive_best_model(t, samples, names);
    REQUIRE(result.best_score.exact);
    REQUIRE_THAT(result.best_score.score_hi, WithinAbs(reference.score, 1e-9));
    REQUIRE(result.best_model == reference.model);
  }
}

TEST_CASE("budgeted search keeps a nondecreasing trace", "[search]") {
  const auto t = ekgtest::synthetic_log(17, 48, 5);
  const auto samples = sample_observations(t, 3, 16, 0, SamplingScheme::Partition);
  SearchConfig config;
  config.first_pass_budget = Budget::nodes(50);
  const auto result = discover(t, samples, config);
  REQUIRE_FALSE(result.trace.empty());
  for (std::size_t i = 1; i < result.trace.size(); ++i) {
    REQUIRE(result.trace[i].best_score >= result.trace[i - 1].best_score);
  }
  CHECK(result.trace.back().best_score == result.best_score.score_hi);
  CHECK(result.trace.back().model == result.best_model);
  CHECK(result.best_score.exact);
}

TEST_CASE("worker count does not change the result", "[search]") {
  const auto t = ekgtest::synthetic_log(19, 64, 6);
  const auto samples = sample_observations(t, 4, 16, 0, SamplingScheme::Partition);
  SearchConfig config;
  config.first_pass_budget = Budget::nodes(200);
  config.workers = 1;
  const auto a = discover(t, samples, config);
  config.workers = 4;
  const auto b = discover(t, samples, config);
  CHECK(a.best_model == b.best_model);
  CHECK(a.best_score.score_hi == b.best_score.score_hi);
  CHECK(a.counters.visited == b.counters.visited);
  CHECK(a.counters.pruned == b.counters.pruned);
}
