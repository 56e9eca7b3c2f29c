#pragma once

// Serialisation of models, scores and search results (JSON), convergence
// traces (CSV) and posets (DOT).

#include <cmath>
#include <cstddef>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ekgdisc/error.hpp"
#include "ekgdisc/event_table.hpp"
#include "ekgdisc/poset.hpp"
#include "ekgdisc/relations.hpp"
#include "ekgdisc/scoring.hpp"
#include "ekgdisc/search.hpp"

namespace ekgdisc {

using Json = nlohmann::ordered_json;

/// [["Order"], ["Order", "Payment"]]
inline Json model_to_json(const Model& model) {
  Json out = Json::array();
  for (const auto& set : model) {
    Json names = Json::array();
    for (const auto& n : set.members()) names.push_back(n);
    out.push_back(std::move(names));
  }
  return out;
}

/// Accepts the model_to_json form; a bare string inside the outer array is
/// read as an atomic set.
inline Model parse_model_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, std::string("model is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) {
    throw Error(ErrorCode::MalformedInput, "model must be a JSON array of feature sets");
  }
  Model model;
  for (const auto& entry : doc) {
    std::vector<std::string> names;
    if (entry.is_string()) {
      names.push_back(entry.get<std::string>());
    } else if (entry.is_array()) {
      for (const auto& n : entry) {
        if (!n.is_string()) {
          throw Error(ErrorCode::MalformedInput, "feature names must be strings");
        }
        names.push_back(n.get<std::string>());
      }
    } else {
      throw Error(ErrorCode::MalformedInput, "feature set must be a string or an array");
    }
    if (names.empty() || names.size() > 2) {
      throw Error(ErrorCode::MalformedInput, "feature set must name one or two features");
    }
    model.insert(FeatureSet::from(std::move(names)));
  }
  return model;
}

inline void require_model_features(const EventTable& table, const Model& model) {
  for (const auto& set : model) {
    for (const auto& n : set.members()) table.require_feature(n);
  }
}

/// Finite values as numbers; infinities as "-inf" / "inf" strings.
inline Json log_value(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return v;
}

inline Json count_to_json(const BoundedCount& c, std::size_t sample_size) {
  Json j;
  j["size"] = sample_size;
  j["log2_count_lower"] = log_value(c.log2_lower);
  j["log2_count_upper"] = log_value(c.log2_upper);
  j["exact"] = c.exact;
  return j;
}

inline Json score_to_json(const LogScore& score, std::span<const Observation> samples) {
  Json j;
  j["log2_prior"] = log_value(score.log2_prior);
  j["log2_score_lower"] = log_value(score.score_lo);
  j["log2_score_upper"] = log_value(score.score_hi);
  j["exact"] = score.exact;
  Json per = Json::array();
  for (std::size_t i = 0; i < score.counts.size(); ++i) {
    per.push_back(count_to_json(score.counts[i], i < samples.size() ? samples[i].size() : 0));
  }
  j["samples"] = std::move(per);
  return j;
}

inline Json counters_to_json(const SearchCounters& c) {
  Json j;
  j["visited"] = c.visited;
  j["pruned"] = c.pruned;
  j["enqueued"] = c.enqueued;
  j["reestimated"] = c.reestimated;
  j["dismissed"] = c.dismissed;
  j["passes"] = c.passes;
  return j;
}

/// Timing-free summary of a discovery run; identical inputs give identical
/// documents.
inline Json result_to_json(const DiscoveryResult& result,
                           std::span<const Observation> samples) {
  Json j;
  j["best_model"] = model_to_json(result.best_model);
  j["best_model_label"] = result.best_model.label();
  j["score"] = score_to_json(result.best_score, samples);
  j["resolved"] = result.resolved;
  j["counters"] = counters_to_json(result.counters);
  j["feature_order"] = result.feature_order;
  j["diagnostics"] = result.diagnostics;
  return j;
}

inline std::string format_log2(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// elapsed_ms,best_score_log2,model
inline void write_trace_csv(std::ostream& out, std::span<const TraceEntry> trace) {
  out << "elapsed_ms,best_score_log2,model\n";
  std::ostringstream ms;
  for (const auto& t : trace) {
    ms.str("");
    ms.setf(std::ios::fixed);
    ms.precision(3);
    ms << t.elapsed_ms;
    out << ms.str() << ',' << format_log2(t.best_score) << ',';
    detail::write_field(out, t.model.label(), ',');
    out << '\n';
  }
}

namespace detail {

inline std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf",
                                            "#bcbd22", "#7f7f7f"};
  return kColors[i % std::size(kColors)];
}

}  // namespace detail

/// DOT digraph of the transitive reduction. Edges carry a `features`
/// attribute listing the inducing feature sets and are coloured per set.
inline std::string export_dot(const Poset& poset, const Model& model) {
  const Poset reduced = transitive_reduction(poset);
  std::ostringstream os;
  os << "digraph ekg {\n  rankdir=LR;\n  node [shape=box];\n";
  for (std::size_t v = 0; v < reduced.size(); ++v) {
    os << "  n" << v << " [label=\"" << detail::dot_escape(reduced.label(v)) << "\"];\n";
  }
  const auto sets = model.sets();
  const auto edges = reduced.edges();
  const auto tags = reduced.tags();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    os << "  n" << edges[e].first << " -> n" << edges[e].second;
    if (!tags.empty()) {
      std::string colors;
      for (const auto& part : detail::split_trimmed(tags[e], '|')) {
        for (std::size_t s = 0; s < sets.size(); ++s) {
          if (sets[s].label() == part) {
            if (!colors.empty()) colors += ':';
            colors += detail::palette(s);
          }
        }
      }
      os << " [features=\"" << detail::dot_escape(tags[e]) << "\"";
      if (!colors.empty()) os << ", color=\"" << colors << "\"";
      os << "]";
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace ekgdisc
