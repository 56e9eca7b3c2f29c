#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ekgdisc/detail/delimited.hpp"
#include "ekgdisc/error.hpp"

namespace ekgdisc {

using ValueId = std::uint32_t;
/// Sorted, duplicate-free value tokens of one cell, interned per feature.
using ValueSet = std::vector<ValueId>;

struct IngestConfig {
  enum class OrderKind { Auto, Numeric, Lexicographic };

  std::string id_column = "id";
  std::optional<std::string> order_column;
  char delimiter = ',';
  char value_separator = ';';
  /// Empty selects every column other than the id and order columns.
  std::vector<std::string> feature_columns;
  OrderKind order_kind = OrderKind::Auto;
};

/// Events in observed (chronological) order with multi-valued feature cells.
class EventTable {
 public:
  /// cells[e][f] holds the raw tokens of event e for feature f.
  EventTable(std::vector<std::string> event_ids,
             std::vector<std::string> features,
             const std::vector<std::vector<std::vector<std::string>>>& cells)
      : event_ids_(std::move(event_ids)), features_(std::move(features)) {
    if (event_ids_.empty()) {
      throw Error(ErrorCode::EmptyTable, "event table has no events");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : event_ids_) {
      if (!seen.insert(id).second) {
        throw Error(ErrorCode::DuplicateEventId, "duplicate event id: " + id);
      }
    }
    seen.clear();
    for (const auto& f : features_) {
      if (!seen.insert(f).second) {
        throw Error(ErrorCode::DuplicateFeature, "duplicate feature: " + f);
      }
    }
    if (cells.size() != event_ids_.size()) {
      throw Error(ErrorCode::InvalidArgument, "cell rows do not match events");
    }
    dictionaries_.resize(features_.size());
    std::vector<std::unordered_map<std::string, ValueId>> lookup(
        features_.size());
    values_.resize(event_ids_.size() * features_.size());
    for (std::size_t e = 0; e < cells.size(); ++e) {
      if (cells[e].size() != features_.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "event " + event_ids_[e] + " lacks a cell per feature");
      }
      for (std::size_t f = 0; f < features_.size(); ++f) {
        ValueSet& vs = values_[e * features_.size() + f];
        for (const auto& raw : cells[e][f]) {
          const std::string token{detail::trim(raw)};
          if (token.empty()) continue;
          auto [it, inserted] = lookup[f].try_emplace(
              token, static_cast<ValueId>(dictionaries_[f].size()));
          if (inserted) dictionaries_[f].push_back(token);
          vs.push_back(it->second);
        }
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
      }
    }
  }

  std::size_t size() const { return event_ids_.size(); }
  std::size_t num_features() const { return features_.size(); }

  const std::string& event_id(std::size_t e) const { return event_ids_.at(e); }
  std::span<const std::string> event_ids() const { return event_ids_; }
  std::span<const std::string> features() const { return features_; }

  std::optional<std::size_t> feature_index(std::string_view name) const {
    const auto it = std::find(features_.begin(), features_.end(), name);
    if (it == features_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - features_.begin());
  }

  std::size_t require_feature(std::string_view name) const {
    if (auto idx = feature_index(name)) return *idx;
    throw Error(ErrorCode::UnknownFeature,
                "unknown feature: " + std::string{name});
  }

  const ValueSet& values(std::size_t event, std::size_t feature) const {
    return values_[event * features_.size() + feature];
  }

  const std::string& token(std::size_t feature, ValueId id) const {
    return dictionaries_[feature][id];
  }

  /// Number of distinct tokens seen for a feature.
  std::size_t dictionary_size(std::size_t feature) const {
    return dictionaries_[feature].size();
  }

  /// Cell contents as lexicographically sorted strings.
  std::vector<std::string> value_strings(std::size_t event,
                                         std::size_t feature) const {
    std::vector<std::string> out;
    for (ValueId v : values(event, feature)) out.push_back(token(feature, v));
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const EventTable& a, const EventTable& b) {
    if (a.event_ids_ != b.event_ids_ || a.features_ != b.features_) {
      return false;
    }
    for (std::size_t e = 0; e < a.size(); ++e) {
      for (std::size_t f = 0; f < a.num_features(); ++f) {
        if (a.value_strings(e, f) != b.value_strings(e, f)) return false;
      }
    }
    return true;
  }

 private:
  std::vector<std::string> event_ids_;
  std::vector<std::string> features_;
  std::vector<std::vector<std::string>> dictionaries_;
  std::vector<ValueSet> values_;
};

namespace detail {

inline std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses delimiter-separated text with a mandatory header row.
inline EventTable parse_event_table(std::istream& source,
                                    const IngestConfig& config) {
  auto records = detail::read_delimited(source, config.delimiter);
  if (records.empty()) {
    throw Error(ErrorCode::EmptyTable, "input has no header row");
  }
  std::vector<std::string> header;
  for (const auto& h : records.front()) header.emplace_back(detail::trim(h));

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::MissingColumn, "missing column: " + name);
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t id_col = column(config.id_column);
  std::optional<std::size_t> order_col;
  if (config.order_column) order_col = column(*config.order_column);

  std::vector<std::string> features = config.feature_columns;
  if (features.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != id_col && c != order_col) features.push_back(header[c]);
    }
  }
  std::vector<std::size_t> feature_cols;
  for (const auto& f : features) feature_cols.push_back(column(f));

  const std::size_t rows = records.size() - 1;
  if (rows == 0) throw Error(ErrorCode::EmptyTable, "input has no events");

  auto cell = [&](std::size_t row, std::size_t col) -> std::string_view {
    const auto& rec = records[row + 1];
    return col < rec.size() ? std::string_view{rec[col]} : std::string_view{};
  };

  // Stable ordering by the order column; ties keep input row order.
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (order_col) {
    std::vector<std::string> keys(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      keys[r] = std::string{detail::trim(cell(r, *order_col))};
      if (keys[r].empty()) {
        throw Error(ErrorCode::BadOrderValue,
                    "empty ordering value in row " + std::to_string(r + 1));
      }
    }
    std::vector<double> numeric(rows);
    bool all_numeric = true;
    for (std::size_t r = 0; r < rows; ++r) {
      if (auto v = detail::parse_number(keys[r])) {
        numeric[r] = *v;
      } else {
        all_numeric = false;
        if (config.order_kind == IngestConfig::OrderKind::Numeric) {
          throw Error(ErrorCode::BadOrderValue,
                      "unparseable ordering value: " + keys[r]);
        }
      }
    }
    const bool use_numeric =
        config.order_kind == IngestConfig::OrderKind::Numeric ||
        (config.order_kind == IngestConfig::OrderKind::Auto && all_numeric);
    if (use_numeric) {
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return numeric[a] < numeric[b]; });
    } else {
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return keys[a] < keys[b]; });
    }
  }

  std::vector<std::string> ids;
  std::vector<std::vector<std::vector<std::string>>> cells;
  ids.reserve(rows);
  cells.reserve(rows);
  for (std::size_t r : order) {
    ids.emplace_back(detail::trim(cell(r, id_col)));
    if (ids.back().empty()) {
      throw Error(ErrorCode::MalformedInput,
                  "empty event id in row " + std::to_string(r + 1));
    }
    auto& row = cells.emplace_back();
    for (std::size_t c : feature_cols) {
      row.push_back(detail::split_trimmed(cell(r, c), config.value_separator));
    }
  }
  return EventTable(std::move(ids), std::move(features), cells);
}

inline EventTable load_event_table(const std::filesystem::path& path,
                                   const IngestConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::InputNotFound,
                "cannot open input: " + path.string());
  }
  return parse_event_table(in, config);
}

/// Canonical form: id column then features, tokens sorted within a cell.
inline void write_event_table(std::ostream& out, const EventTable& table,
                              const std::string& id_column = "id",
                              char delimiter = ',', char value_separator = ';') {
  detail::write_field(out, id_column, delimiter);
  for (const auto& f : table.features()) {
    out << delimiter;
    detail::write_field(out, f, delimiter);
  }
  out << '\n';
  for (std::size_t e = 0; e < table.size(); ++e) {
    detail::write_field(out, table.event_id(e), delimiter);
    for (std::size_t f = 0; f < table.num_features(); ++f) {
      out << delimiter;
      std::string joined;
      for (const auto& tok : table.value_strings(e, f)) {
        if (!joined.empty()) joined.push_back(value_separator);
        joined += tok;
      }
      detail::write_field(out, joined, delimiter);
    }
    out << '\n';
  }
}

/// An independent observation: a chronological subsequence of a table.
class Observation {
 public:
  Observation(const EventTable& parent, std::vector<std::size_t> members)
      : parent_(&parent), members_(std::move(members)) {
    if (members_.empty()) {
      throw Error(ErrorCode::InvalidArgument, "observation has no events");
    }
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (members_[i] >= parent.size()) {
        throw Error(ErrorCode::InvalidArgument, "observation member out of range");
      }
      if (i > 0 && members_[i] <= members_[i - 1]) {
        throw Error(ErrorCode::InvalidArgument,
                    "observation members must be distinct and chronological");
      }
    }
  }

  const EventTable& parent() const { return *parent_; }
  std::span<const std::size_t> members() const { return members_; }
  std::size_t size() const { return members_.size(); }

  friend bool operator==(const Observation& a, const Observation& b) {
    return a.parent_ == b.parent_ && a.members_ == b.members_;
  }

 private:
  const EventTable* parent_;
  std::vector<std::size_t> members_;
};

enum class SamplingScheme { ContiguousWindow, Partition };

/// Draws `n` observations of exactly `size` events each.
inline std::vector<Observation> sample_observations(const EventTable& table,
                                                    std::size_t n,
                                                    std::size_t size,
                                                    std::uint64_t seed,
                                                    SamplingScheme scheme) {
  if (n == 0) {
    throw Error(ErrorCode::InvalidArgument, "sample count must be at least 1");
  }
  if (size == 0 || size > table.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "sample size must be in [1, " + std::to_string(table.size()) +
                    "]");
  }
  std::vector<Observation> out;
  out.reserve(n);
  auto window = [&](std::size_t start) {
    std::vector<std::size_t> members(size);
    std::iota(members.begin(), members.end(), start);
    return Observation(table, std::move(members));
  };
  if (scheme == SamplingScheme::Partition) {
    if (n > table.size() / size) {
      throw Error(ErrorCode::InvalidArgument,
                  "partition sampling needs n * size <= number of events");
    }
    for (std::size_t i = 0; i < n; ++i) out.push_back(window(i * size));
    return out;
  }
  std::mt19937_64 rng(seed);
  const std::uint64_t max_start = table.size() - size;
  for (std::size_t i = 0; i < n; ++i) {
    // Modulo reduction keeps the draw identical across standard libraries.
    const std::uint64_t start = max_start == 0 ? 0 : rng() % (max_start + 1);
    out.push_back(window(static_cast<std::size_t>(start)));
  }
  return out;
}

}  // namespace ekgdisc
