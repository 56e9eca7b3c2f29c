#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <sys/wait.h>

#include "test_support.hpp"

using namespace ekgdisc;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

const std::string kLog = ekgtest::data_path("purchase_order_log.csv").string();

Json parse_json(const std::string& s) { return Json::parse(s); }

std::vector<std::string> csv_column(const std::string& text, std::size_t column) {
  std::istringstream in(text);
  const auto rows = detail::read_delimited(in, ',');
  std::vector<std::string> out;
  for (std::size_t r = 1; r < rows.size(); ++r) out.push_back(rows[r].at(column));
  return out;
}

}  // namespace

TEST_CASE("discover writes result, trace and DOT files", "[cli]") {
  const auto dir = ekgtest::fresh_temp_dir("ekg_cli_discover");
  const auto r = ekgtest::run_cli({"discover", "--input", kLog, "--features",
                                   "Order,Invoice,Payment,SupplierOrder,Actor", "--samples", "1",
                                   "--sample-size", "14", "--out", dir.string()});
  REQUIRE(r.code == 0);
  REQUIRE(std::filesystem::exists(dir / "result.json"));
  REQUIRE(std::filesystem::exists(dir / "trace.csv"));
  REQUIRE(std::filesystem::exists(dir / "ekg_0.dot"));

  const auto result = parse_json(ekgtest::read_text(dir / "result.json"));
  CHECK(result["manifest"]["sample_size"] == 14);
  CHECK(result["score"]["exact"] == true);
  const double score = result["score"]["log2_score_upper"].get<double>();

  const auto trace = ekgtest::read_text(dir / "trace.csv");
  CHECK(trace.rfind("elapsed_ms,best_score_log2,model\n", 0) == 0);
  const auto scores = csv_column(trace, 1);
  REQUIRE_FALSE(scores.empty());
  for (std::size_t i = 1; i < scores.size(); ++i) {
    REQUIRE(std::stod(scores[i]) >= std::stod(scores[i - 1]));
  }
  CHECK_THAT(std::stod(scores.back()), WithinAbs(score, 1e-12));
  CHECK(csv_column(trace, 2).back() ==
        parse_model_json(result["best_model"].dump()).label());
  std::filesystem::remove_all(dir);
}

TEST_CASE("identical manifests give byte-identical results", "[cli]") {
  const auto d1 = ekgtest::fresh_temp_dir("ekg_cli_det1");
  const auto d2 = ekgtest::fresh_temp_dir("ekg_cli_det2");
  const std::vector<std::string> base{"discover", "--input", kLog, "--samples", "3",
                                      "--sample-size", "8", "--seed", "7", "--budget-nodes",
                                      "300"};
  auto a = base;
  a.insert(a.end(), {"--out", d1.string(), "--threads", "1"});
  auto b = base;
  b.insert(b.end(), {"--out", d2.string(), "--threads", "4"});
  REQUIRE(ekgtest::run_cli(a).code == 0);
  REQUIRE(ekgtest::run_cli(b).code == 0);
  CHECK(ekgtest::read_text(d1 / "result.json") == ekgtest::read_text(d2 / "result.json"));
  CHECK(ekgtest::read_text(d1 / "ekg_2.dot") == ekgtest::read_text(d2 / "ekg_2.dot"));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("missing input reports INPUT_NOT_FOUND with exit code 2", "[cli]") {
  const auto r = ekgtest::run_cli({"discover", "--input", "/no/such/file.csv", "--out", "/tmp/x"});
  CHECK(r.code == 2);
  const auto doc = parse_json(r.out);
  CHECK(doc["error"]["code"] == "INPUT_NOT_FOUND");
}

TEST_CASE("the installed binary uses the same exit codes", "[cli]") {
  const std::string cmd = std::string(EKGDISC_CLI_PATH) +
                          " discover --input /no/such/file.csv --out /tmp/x > /dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
  const int ok = std::system((std::string(EKGDISC_CLI_PATH) + " --help > /dev/null").c_str());
  CHECK(WEXITSTATUS(ok) == 0);
}

TEST_CASE("score reports bounds around the exact count", "[cli]") {
  const auto r = ekgtest::run_cli({"score", "--input", kLog, "--model",
                                   R"([["Order"],["Invoice"]])"});
  REQUIRE(r.code == 0);
  const auto doc = parse_json(r.out);
  const auto t = ekgtest::purchase_log();
  const auto p = build_poset(ekgtest::full_sample(t),
                             Model{FeatureSet("Order"), FeatureSet("Invoice")});
  const double truth = oracle::log2_big(count_extensions_exact(p));
  const auto& sample = doc["score"]["samples"][0];
  CHECK(sample["size"] == 14);
  CHECK(sample["log2_count_lower"].get<double>() <= truth + 1e-6);
  CHECK(sample["log2_count_upper"].get<double>() >= truth - 1e-6);
}

TEST_CASE("score of the empty model is minus log n!", "[cli]") {
  const auto r = ekgtest::run_cli({"score", "--input", kLog, "--model", "[]", "--samples", "2",
                                   "--sample-size", "6", "--budget-nodes", "0"});
  REQUIRE(r.code == 0);
  const auto doc = parse_json(r.out);
  CHECK(doc["score"]["exact"] == true);
  CHECK_THAT(doc["score"]["log2_score_upper"].get<double>(),
             WithinAbs(-2.0 * log2_factorial(6), 1e-9));
}

TEST_CASE("score accepts derived feature sets", "[cli]") {
  const auto r = ekgtest::run_cli({"score", "--input", kLog, "--model",
                                   R"([["Order","Payment"]])", "--budget-nodes", "100000"});
  REQUIRE(r.code == 0);
  const auto doc = parse_json(r.out);
  CHECK(doc["model"].dump() == R"([["Order","Payment"]])");
  const auto t = ekgtest::purchase_log();
  const auto p = build_poset(ekgtest::full_sample(t), Model{FeatureSet("Order", "Payment")});
  const double truth = oracle::log2_big(count_extensions_exact(p));
  CHECK(doc["score"]["samples"][0]["log2_count_lower"].get<double>() <= truth + 1e-6);
  CHECK(doc["score"]["samples"][0]["log2_count_upper"].get<double>() >= truth - 1e-6);
}

TEST_CASE("input and usage errors", "[cli]") {
  auto code_of = [](const ekgtest::CliRun& r) {
    return parse_json(r.out)["error"]["code"].get<std::string>();
  };
  const auto unknown = ekgtest::run_cli({"score", "--input", kLog, "--model", R"([["Nope"]])"});
  CHECK(unknown.code == 2);
  CHECK(code_of(unknown) == "UNKNOWN_FEATURE");

  const auto bad_model = ekgtest::run_cli({"score", "--input", kLog, "--model", "[["});
  CHECK(bad_model.code == 2);
  CHECK(code_of(bad_model) == "MALFORMED_INPUT");

  const auto no_model = ekgtest::run_cli({"score", "--input", kLog});
  CHECK(no_model.code == 2);

  const auto bad_flag = ekgtest::run_cli({"discover", "--bogus"});
  CHECK(bad_flag.code == 2);
  CHECK(code_of(bad_flag) == "USAGE");

  const auto none = ekgtest::run_cli({});
  CHECK(none.code == 2);

  const auto bad_scheme = ekgtest::run_cli({"sample", "--input", kLog, "--scheme", "zigzag"});
  CHECK(bad_scheme.code == 2);

  const auto too_big = ekgtest::run_cli({"sample", "--input", kLog, "--sample-size", "99"});
  CHECK(too_big.code == 2);

  const auto no_out = ekgtest::run_cli({"discover", "--input", kLog});
  CHECK(no_out.code == 2);

  CHECK(ekgtest::run_cli({"--help"}).code == 0);
}

TEST_CASE("sample prints event id lists", "[cli]") {
  const auto r = ekgtest::run_cli({"sample", "--input", kLog, "--samples", "2", "--sample-size",
                                   "7", "--scheme", "partition"});
  REQUIRE(r.code == 0);
  const auto doc = parse_json(r.out);
  REQUIRE(doc["samples"].size() == 2);
  CHECK(doc["samples"][0].front() == "e1");
  CHECK(doc["samples"][1].front() == "e9");
  CHECK(doc["samples"][1].back() == "e34");
}

TEST_CASE("export writes one DOT file per sample", "[cli]") {
  const auto dir = ekgtest::fresh_temp_dir("ekg_cli_export");
  const auto r = ekgtest::run_cli({"export", "--input", kLog, "--model", R"([["Order"]])",
                                   "--samples", "2", "--sample-size", "7", "--scheme",
                                   "partition", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "ekg_0.dot"));
  CHECK(std::filesystem::exists(dir / "ekg_1.dot"));
  const auto to_stdout = ekgtest::run_cli({"export", "--input", kLog, "--model", "[]"});
  CHECK(to_stdout.out.rfind("digraph", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config file values are overridden by flags", "[cli]") {
  const auto dir = ekgtest::fresh_temp_dir("ekg_cli_config");
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"input": ")" << kLog
        << R"(", "samples": 2, "sample_size": 5, "scheme": "partition", "seed": 3})";
  }
  const auto from_file = ekgtest::run_cli({"sample", "--config", (dir / "run.json").string()});
  REQUIRE(from_file.code == 0);
  auto doc = parse_json(from_file.out);
  CHECK(doc["manifest"]["sample_size"] == 5);
  CHECK(doc["samples"].size() == 2);

  const auto overridden = ekgtest::run_cli(
      {"sample", "--config", (dir / "run.json").string(), "--sample-size", "4"});
  REQUIRE(overridden.code == 0);
  doc = parse_json(overridden.out);
  CHECK(doc["manifest"]["sample_size"] == 4);
  CHECK(doc["samples"][0].size() == 4);

  {
    std::ofstream cfg(dir / "bad.json");
    cfg << R"({"input": "x", "colour": "blue"})";
  }
  CHECK(ekgtest::run_cli({"sample", "--config", (dir / "bad.json").string()}).code == 2);
  CHECK(ekgtest::run_cli({"sample", "--config", (dir / "missing.json").string()}).code == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("EKG_THREADS caps the worker count", "[cli]") {
  ::setenv("EKG_THREADS", "2", 1);
  CHECK(effective_workers(8) == 2);
  CHECK(effective_workers(1) == 1);
  ::setenv("EKG_THREADS", "junk", 1);
  CHECK(effective_workers(8) == 8);
  ::unsetenv("EKG_THREADS");
  CHECK(effective_workers(0) == 1);
}

TEST_CASE("verify mode prints an agreement table", "[cli]") {
  const auto r = ekgtest::run_cli({"--verify", "--trials", "3"});
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("12/12 instances agree"));
  const auto sub = ekgtest::run_cli({"verify", "--trials", "2", "--seed", "9"});
  CHECK(sub.code == 0);
  CHECK_THAT(sub.out, ContainsSubstring("8/8 instances agree"));
}
