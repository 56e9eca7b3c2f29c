#pragma once

// Command-line driver. `run_cli` takes the arguments without the program
// name and returns the process exit code: 0 success, 2 usage or input
// error, 3 internal failure. Errors are printed to `out` as
// {"error": {"code": ..., "message": ...}}.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ekgdisc/error.hpp"
#include "ekgdisc/event_table.hpp"
#include "ekgdisc/extcount.hpp"
#include "ekgdisc/oracle.hpp"
#include "ekgdisc/poset.hpp"
#include "ekgdisc/relations.hpp"
#include "ekgdisc/report.hpp"
#include "ekgdisc/scoring.hpp"
#include "ekgdisc/search.hpp"

namespace ekgdisc {

inline constexpr std::uint64_t kDefaultNodeBudget = 200000;

/// Everything that determines a run. Worker count is excluded from the
/// outputs, which do not depend on it.
struct RunManifest {
  std::filesystem::path input;
  IngestConfig ingest;
  std::size_t samples = 1;
  /// 0 selects |E| / samples.
  std::size_t sample_size = 0;
  SamplingScheme scheme = SamplingScheme::ContiguousWindow;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> budget_ms;
  std::optional<std::uint64_t> budget_nodes;
  std::vector<std::string> features;
  std::optional<std::string> model;
  std::filesystem::path out_dir;
  unsigned threads = 1;
  unsigned max_passes = 16;

  Budget budget() const {
    Budget b;
    if (budget_ms) b.time_limit = std::chrono::milliseconds(*budget_ms);
    if (budget_nodes) b.node_limit = *budget_nodes;
    if (!budget_ms && !budget_nodes) b.node_limit = kDefaultNodeBudget;
    return b;
  }
};

inline const char* to_string(SamplingScheme s) {
  return s == SamplingScheme::Partition ? "partition" : "window";
}

inline SamplingScheme parse_scheme(const std::string& s) {
  if (s == "window") return SamplingScheme::ContiguousWindow;
  if (s == "partition") return SamplingScheme::Partition;
  throw Error(ErrorCode::InvalidArgument, "unknown sampling scheme: " + s);
}

inline IngestConfig::OrderKind parse_order_kind(const std::string& s) {
  if (s == "auto") return IngestConfig::OrderKind::Auto;
  if (s == "numeric") return IngestConfig::OrderKind::Numeric;
  if (s == "lexicographic") return IngestConfig::OrderKind::Lexicographic;
  throw Error(ErrorCode::InvalidArgument, "unknown order kind: " + s);
}

inline char parse_single_char(const std::string& s, const char* what) {
  if (s == "\\t" || s == "tab") return '\t';
  if (s.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be one character");
  }
  return s[0];
}

inline std::vector<std::string> parse_name_list(const Json& v) {
  if (v.is_string()) return detail::split_trimmed(v.get<std::string>(), ',');
  std::vector<std::string> out;
  if (!v.is_array()) throw Error(ErrorCode::MalformedInput, "expected a list of names");
  for (const auto& n : v) out.push_back(n.get<std::string>());
  return out;
}

/// Reads a flat JSON object whose keys mirror the long flag names
/// (with '_' for '-').
inline void apply_config_file(const std::filesystem::path& path, RunManifest& m) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::InputNotFound, "cannot open config file: " + path.string());
  }
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedInput, "config must be a JSON object");
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "input") m.input = v.get<std::string>();
      else if (key == "out") m.out_dir = v.get<std::string>();
      else if (key == "samples") m.samples = v.get<std::size_t>();
      else if (key == "sample_size") m.sample_size = v.get<std::size_t>();
      else if (key == "scheme") m.scheme = parse_scheme(v.get<std::string>());
      else if (key == "seed") m.seed = v.get<std::uint64_t>();
      else if (key == "budget_ms") m.budget_ms = v.get<std::int64_t>();
      else if (key == "budget_nodes") m.budget_nodes = v.get<std::uint64_t>();
      else if (key == "features") m.features = parse_name_list(v);
      else if (key == "model") m.model = v.is_string() ? v.get<std::string>() : v.dump();
      else if (key == "threads") m.threads = v.get<unsigned>();
      else if (key == "max_passes") m.max_passes = v.get<unsigned>();
      else if (key == "id_column") m.ingest.id_column = v.get<std::string>();
      else if (key == "order_column") m.ingest.order_column = v.get<std::string>();
      else if (key == "order_kind") m.ingest.order_kind = parse_order_kind(v.get<std::string>());
      else if (key == "delimiter") m.ingest.delimiter = parse_single_char(v.get<std::string>(), "delimiter");
      else if (key == "value_separator") m.ingest.value_separator = parse_single_char(v.get<std::string>(), "value separator");
      else if (key == "columns") m.ingest.feature_columns = parse_name_list(v);
      else throw Error(ErrorCode::InvalidArgument, "unknown config key: " + key);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("bad config value: ") + e.what());
  }
}

/// Worker count after applying the EKG_THREADS cap.
inline unsigned effective_workers(unsigned requested) {
  unsigned w = std::max(1U, requested);
  if (const char* env = std::getenv("EKG_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != nullptr && *end == '\0' && cap > 0) {
      w = std::min<unsigned>(w, static_cast<unsigned>(std::min<unsigned long>(cap, 1024)));
    }
  }
  return w;
}

inline Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["input"] = m.input.string();
  j["samples"] = m.samples;
  j["sample_size"] = m.sample_size;
  j["scheme"] = to_string(m.scheme);
  j["seed"] = m.seed;
  const Budget b = m.budget();
  j["budget_ms"] = b.time_limit ? Json(b.time_limit->count()) : Json(nullptr);
  j["budget_nodes"] = b.node_limit ? Json(*b.node_limit) : Json(nullptr);
  j["max_passes"] = m.max_passes;
  j["features"] = m.features;
  return j;
}

// The table lives on the heap so observations keep a stable parent.
struct LoadedRun {
  std::unique_ptr<EventTable> table;
  std::vector<Observation> samples;
};

inline LoadedRun load_run(RunManifest& m) {
  if (m.input.empty()) throw Error(ErrorCode::InvalidArgument, "--input is required");
  LoadedRun run{std::make_unique<EventTable>(load_event_table(m.input, m.ingest)), {}};
  if (m.samples == 0) throw Error(ErrorCode::InvalidArgument, "--samples must be at least 1");
  if (m.sample_size == 0) m.sample_size = std::max<std::size_t>(1, run.table->size() / m.samples);
  run.samples = sample_observations(*run.table, m.samples, m.sample_size, m.seed, m.scheme);
  return run;
}

inline void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::InvalidArgument, "cannot create output directory: " + dir.string());
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::InvalidArgument, "failed writing " + path.string());
}

inline void write_dot_files(const std::filesystem::path& dir,
                            std::span<const Observation> samples, const Model& model) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    write_file(dir / ("ekg_" + std::to_string(i) + ".dot"),
               export_dot(build_poset(samples[i], model), model));
  }
}

inline int cmd_discover(RunManifest m, std::ostream& out) {
  if (m.out_dir.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
  auto run = load_run(m);
  ensure_out_dir(m.out_dir);
  SearchConfig config;
  config.candidate_features = m.features;
  config.first_pass_budget = m.budget();
  config.max_passes = m.max_passes;
  config.workers = effective_workers(m.threads);
  config.seed = m.seed;
  const auto result = discover(*run.table, run.samples, config);

  Json doc;
  doc["manifest"] = manifest_to_json(m);
  const Json body = result_to_json(result, run.samples);
  for (const auto& [k, v] : body.items()) doc[k] = v;
  write_file(m.out_dir / "result.json", doc.dump(2) + "\n");

  std::ostringstream trace;
  write_trace_csv(trace, result.trace);
  write_file(m.out_dir / "trace.csv", trace.str());
  write_dot_files(m.out_dir, run.samples, result.best_model);

  Json summary;
  summary["best_model"] = model_to_json(result.best_model);
  summary["log2_score"] = log_value(result.best_score.score_hi);
  summary["out"] = m.out_dir.string();
  out << summary.dump() << "\n";
  return 0;
}

inline int cmd_score(RunManifest m, std::ostream& out) {
  if (!m.model) throw Error(ErrorCode::InvalidArgument, "--model is required");
  auto run = load_run(m);
  const Model model = parse_model_json(*m.model);
  require_model_features(*run.table, model);
  Scorer scorer(*run.table, run.samples, effective_workers(m.threads));
  const auto score = scorer.score(model, m.budget());
  Json doc;
  doc["model"] = model_to_json(model);
  doc["score"] = score_to_json(score, run.samples);
  const std::string text = doc.dump(2) + "\n";
  if (!m.out_dir.empty()) {
    ensure_out_dir(m.out_dir);
    write_file(m.out_dir / "score.json", text);
  }
  out << text;
  return 0;
}

inline int cmd_sample(RunManifest m, std::ostream& out) {
  auto run = load_run(m);
  Json doc;
  doc["manifest"] = manifest_to_json(m);
  Json lists = Json::array();
  for (const auto& s : run.samples) {
    Json ids = Json::array();
    for (std::size_t e : s.members()) ids.push_back(run.table->event_id(e));
    lists.push_back(std::move(ids));
  }
  doc["samples"] = std::move(lists);
  const std::string text = doc.dump(2) + "\n";
  if (!m.out_dir.empty()) {
    ensure_out_dir(m.out_dir);
    write_file(m.out_dir / "samples.json", text);
  }
  out << text;
  return 0;
}

inline int cmd_export(RunManifest m, std::ostream& out) {
  if (!m.model) throw Error(ErrorCode::InvalidArgument, "--model is required");
  auto run = load_run(m);
  const Model model = parse_model_json(*m.model);
  require_model_features(*run.table, model);
  if (!m.out_dir.empty()) {
    ensure_out_dir(m.out_dir);
    write_dot_files(m.out_dir, run.samples, model);
    return 0;
  }
  for (const auto& s : run.samples) out << export_dot(build_poset(s, model), model);
  return 0;
}

inline int cmd_verify(std::uint64_t seed, std::size_t trials, std::ostream& out) {
  const auto rows = oracle::run_verification_suite(seed, trials);
  std::size_t agree = 0;
  out << std::left << std::setw(40) << "instance" << std::setw(26) << "oracle"
      << std::setw(34) << "system" << std::setw(7) << "agree" << "discrepancy\n";
  for (const auto& r : rows) {
    out << std::setw(40) << r.instance << std::setw(26) << r.oracle_value << std::setw(34)
        << r.system_value << std::setw(7) << (r.agree ? "yes" : "NO") << r.discrepancy
        << "\n";
    agree += r.agree ? 1 : 0;
  }
  out << agree << "/" << rows.size() << " instances agree\n";
  return agree == rows.size() ? 0 : 3;
}

inline void print_error(std::ostream& out, const std::string& code, const std::string& message) {
  Json doc;
  doc["error"]["code"] = code;
  doc["error"]["message"] = message;
  out << doc.dump() << "\n";
}

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event knowledge graph model discovery"};
  app.require_subcommand(0, 1);

  RunManifest m;
  std::string config_path;
  std::string scheme = "window";
  std::string order_kind = "auto";
  std::string delimiter = ",";
  std::string value_separator = ";";
  std::string features;
  std::string columns;
  std::string order_column;
  std::string input;
  std::string out_dir;
  std::string model;
  std::int64_t budget_ms = 0;
  std::uint64_t budget_nodes = 0;
  bool verify_flag = false;
  std::size_t verify_trials = 25;
  std::uint64_t seed = 0;
  std::size_t samples = 1;
  std::size_t sample_size = 0;
  unsigned max_passes = 16;
  unsigned threads = 1;
  std::string id_column = "id";

  app.add_flag("--verify", verify_flag, "Run the small-instance oracle agreement suite");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Flat JSON config; flags override its values");
    sub->add_option("--input", input, "Event table (CSV)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--samples", samples, "Number of observations");
    sub->add_option("--sample-size", sample_size, "Events per observation");
    sub->add_option("--scheme", scheme, "Sampling scheme: window or partition");
    sub->add_option("--seed", seed, "Sampling seed");
    sub->add_option("--budget-ms", budget_ms, "Per-count time budget (ms)");
    sub->add_option("--budget-nodes", budget_nodes, "Per-count node budget");
    sub->add_option("--max-passes", max_passes, "Re-estimation passes");
    sub->add_option("--features", features, "Candidate features, comma separated");
    sub->add_option("--model", model, "Model as JSON, e.g. [[\"Order\"],[\"Order\",\"Payment\"]]");
    sub->add_option("--threads", threads, "Worker threads (capped by EKG_THREADS)");
    sub->add_option("--id-column", id_column, "Event id column");
    sub->add_option("--order-column", order_column, "Column giving the observed order");
    sub->add_option("--order-kind", order_kind, "auto, numeric or lexicographic");
    sub->add_option("--delimiter", delimiter, "Field delimiter");
    sub->add_option("--value-separator", value_separator, "Separator inside multi-valued cells");
    sub->add_option("--columns", columns, "Feature columns to load, comma separated");
  };
  auto* discover_cmd = app.add_subcommand("discover", "Search for the best model");
  auto* score_cmd = app.add_subcommand("score", "Score a fixed model");
  auto* sample_cmd = app.add_subcommand("sample", "Print sampled observations");
  auto* export_cmd = app.add_subcommand("export", "Write DOT graphs for a model");
  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle agreement suite");
  for (auto* sub : {discover_cmd, score_cmd, sample_cmd, export_cmd}) add_common(sub);
  verify_cmd->add_option("--seed", seed, "Instance seed");
  verify_cmd->add_option("--trials", verify_trials, "Instances per check");
  app.add_option("--trials", verify_trials, "Instances per check for --verify");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(out, "USAGE", e.what());
    err << app.help();
    return 2;
  }

  try {
    if (verify_flag || verify_cmd->parsed()) return cmd_verify(seed, verify_trials, out);
    CLI::App* sub = nullptr;
    for (auto* s : {discover_cmd, score_cmd, sample_cmd, export_cmd}) {
      if (s->parsed()) sub = s;
    }
    if (sub == nullptr) {
      print_error(out, "USAGE", "a subcommand is required");
      err << app.help();
      return 2;
    }
    if (!config_path.empty()) apply_config_file(config_path, m);
    // Flags override the config file.
    auto given = [&](const char* name) { return sub->count(name) > 0; };
    if (given("--input")) m.input = input;
    if (given("--samples")) m.samples = samples;
    if (given("--sample-size")) m.sample_size = sample_size;
    if (given("--max-passes")) m.max_passes = max_passes;
    if (given("--threads")) m.threads = threads;
    if (given("--id-column")) m.ingest.id_column = id_column;
    if (given("--out")) m.out_dir = out_dir;
    if (given("--scheme")) m.scheme = parse_scheme(scheme);
    if (given("--seed")) m.seed = seed;
    if (given("--budget-ms")) m.budget_ms = budget_ms;
    if (given("--budget-nodes")) m.budget_nodes = budget_nodes;
    if (given("--features")) m.features = detail::split_trimmed(features, ',');
    if (given("--model")) m.model = model;
    if (given("--order-column")) m.ingest.order_column = order_column;
    if (given("--order-kind")) m.ingest.order_kind = parse_order_kind(order_kind);
    if (given("--delimiter")) m.ingest.delimiter = parse_single_char(delimiter, "delimiter");
    if (given("--value-separator")) {
      m.ingest.value_separator = parse_single_char(value_separator, "value separator");
    }
    if (given("--columns")) m.ingest.feature_columns = detail::split_trimmed(columns, ',');
    if (m.budget_ms && *m.budget_ms < 0) {
      throw Error(ErrorCode::InvalidArgument, "--budget-ms must be non-negative");
    }

    if (sub == discover_cmd) return cmd_discover(m, out);
    if (sub == score_cmd) return cmd_score(m, out);
    if (sub == sample_cmd) return cmd_sample(m, out);
    return cmd_export(m, out);
  } catch (const Error& e) {
    print_error(out, to_string(e.code()), e.what());
    return e.code() == ErrorCode::InvariantViolation ? 3 : 2;
  } catch (const std::exception& e) {
    print_error(out, "INTERNAL", e.what());
    return 3;
  }
}

}  // namespace ekgdisc
