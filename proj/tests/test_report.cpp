#include <catch_amalgamated.hpp>

#include <regex>
#include <set>
#include <sstream>

#include "test_support.hpp"

using namespace ekgdisc;

namespace {

struct DotShape {
  std::size_t nodes = 0;
  std::vector<std::pair<std::string, std::string>> edges;  // by label
  std::vector<std::string> features;
};

// Minimal structural reading of the emitted subset of DOT.
DotShape read_dot(const std::string& text) {
  REQUIRE(std::regex_search(text, std::regex(R"(^digraph \w+ \{)")));
  REQUIRE(text.substr(text.size() - 2) == "}\n");
  DotShape shape;
  std::map<std::string, std::string> labels;
  const std::regex node(R"re(^\s*(n\d+) \[label="([^"]*)"\];$)re");
  const std::regex edge(R"re(^\s*(n\d+) -> (n\d+)(?: \[features="([^"]*)"(?:, color="[^"]*")?\])?;$)re");
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, node)) {
      labels[m[1]] = m[2];
      ++shape.nodes;
    } else if (std::regex_match(line, m, edge)) {
      REQUIRE(labels.count(m[1]));
      REQUIRE(labels.count(m[2]));
      shape.edges.emplace_back(labels[m[1]], labels[m[2]]);
      shape.features.push_back(m[3]);
    }
  }
  return shape;
}

}  // namespace

TEST_CASE("model JSON round trip", "[report]") {
  const Model m{FeatureSet("Order"), FeatureSet("Order", "Payment")};
  const auto j = model_to_json(m);
  CHECK(j.dump() == R"([["Order"],["Order","Payment"]])");
  CHECK(parse_model_json(j.dump()) == m);
  CHECK(parse_model_json("[]").empty());
  CHECK(parse_model_json(R"(["A", ["B"]])") == Model{FeatureSet("A"), FeatureSet("B")});
  CHECK_THROWS_AS(parse_model_json("{"), Error);
  CHECK_THROWS_AS(parse_model_json(R"({"a":1})"), Error);
  CHECK_THROWS_AS(parse_model_json(R"([["a","b","c"]])"), Error);
  CHECK_THROWS_AS(parse_model_json(R"([[]])"), Error);
  CHECK_THROWS_AS(parse_model_json(R"([[1]])"), Error);
  CHECK_THROWS_AS(parse_model_json(R"([["a","a"]])"), Error);
}

TEST_CASE("infinite scores serialise as strings", "[report]") {
  CHECK(log_value(kNegInf).dump() == "\"-inf\"");
  CHECK(log_value(-2.5).dump() == "-2.5");
  CHECK(format_log2(kNegInf) == "-inf");
}

TEST_CASE("trace CSV layout", "[report]") {
  std::vector<TraceEntry> trace{{0.5, -10.0, Model{}},
                                {1.25, -4.0, Model{FeatureSet("A"), FeatureSet("B")}}};
  std::ostringstream out;
  write_trace_csv(out, trace);
  CHECK(out.str() ==
        "elapsed_ms,best_score_log2,model\n"
        "0.500,-10,{}\n"
        "1.250,-4,\"{{A},{B}}\"\n");
}

TEST_CASE("DOT export of the Order+Invoice poset", "[report]") {
  const auto t = ekgtest::purchase_log();
  const Model m{FeatureSet("Order"), FeatureSet("Invoice")};
  const auto p = build_poset(ekgtest::full_sample(t), m);
  const auto shape = read_dot(export_dot(p, m));
  CHECK(shape.nodes == 14);
  const std::set<std::pair<std::string, std::string>> edges(shape.edges.begin(),
                                                           shape.edges.end());
  CHECK(edges == std::set<std::pair<std::string, std::string>>{{"e2", "e5"},
                                                               {"e5", "e7"},
                                                               {"e7", "e34"},
                                                               {"e1", "e18"},
                                                               {"e18", "e28"},
                                                               {"e5", "e9"},
                                                               {"e9", "e30"},
                                                               {"e18", "e30"}});
  for (std::size_t i = 0; i < shape.edges.size(); ++i) {
    const auto& [a, b] = shape.edges[i];
    const bool invoice = (a == "e5" && b == "e9") || (a == "e9" && b == "e30") ||
                         (a == "e18" && b == "e30");
    CHECK(shape.features[i] == (invoice ? "Invoice" : "Order"));
  }
}

TEST_CASE("DOT export edge cases", "[report]") {
  const auto edgeless = read_dot(export_dot(Poset(3), Model{}));
  CHECK(edgeless.nodes == 3);
  CHECK(edgeless.edges.empty());
  const auto chain = read_dot(export_dot(Poset(3, {{0, 1}, {1, 2}, {0, 2}}), Model{}));
  CHECK(chain.edges.size() == 2);
  const Poset quoted(2, {{0, 1}}, {"a\"b", "c\\d"}, {"X"});
  const auto text = export_dot(quoted, Model{FeatureSet("X")});
  CHECK(text.find(R"(label="a\"b")") != std::string::npos);
  CHECK(text.find(R"(label="c\\d")") != std::string::npos);
}

TEST_CASE("result JSON has stable keys and no timing", "[report]") {
  const auto t = ekgtest::entropy_toy();
  const std::vector<Observation> samples{ekgtest::full_sample(t)};
  SearchConfig config;
  config.first_pass_budget = Budget::nodes(100);
  const auto a = result_to_json(discover(t, samples, config), samples);
  const auto b = result_to_json(discover(t, samples, config), samples);
  CHECK(a.dump() == b.dump());
  std::vector<std::string> keys;
  for (const auto& [k, v] : a.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"best_model", "best_model_label", "score", "resolved",
                                         "counters", "feature_order", "diagnostics"});
  CHECK(a.dump().find("elapsed") == std::string::npos);
}
