#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ekgdisc/detail/bit_matrix.hpp"
#include "ekgdisc/error.hpp"
#include "ekgdisc/event_table.hpp"

namespace ekgdisc {

/// One atomic ({X}) or derived ({Xi, Xk}) feature set.
class FeatureSet {
 public:
  explicit FeatureSet(std::string feature) { members_.push_back(std::move(feature)); }

  FeatureSet(std::string first, std::string second) {
    if (first == second) {
      throw Error(ErrorCode::InvalidArgument,
                  "derived feature needs two distinct features: " + first);
    }
    members_ = {std::move(first), std::move(second)};
    std::sort(members_.begin(), members_.end());
  }

  static FeatureSet from(std::vector<std::string> names) {
    if (names.size() == 1) return FeatureSet(std::move(names[0]));
    if (names.size() == 2) return FeatureSet(std::move(names[0]), std::move(names[1]));
    throw Error(ErrorCode::InvalidArgument,
                "feature sets hold one or two features");
  }

  bool is_atomic() const { return members_.size() == 1; }
  std::span<const std::string> members() const { return members_; }
  const std::string& first() const { return members_.front(); }

  std::string label() const {
    return is_atomic() ? members_[0] : members_[0] + "+" + members_[1];
  }

  friend auto operator<=>(const FeatureSet&, const FeatureSet&) = default;
  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::vector<std::string> members_;
};

/// A set of feature sets; kept sorted so equal models compare equal.
class Model {
 public:
  Model() = default;
  Model(std::initializer_list<FeatureSet> sets) {
    for (const auto& s : sets) insert(s);
  }
  explicit Model(std::vector<FeatureSet> sets) {
    for (auto& s : sets) insert(std::move(s));
  }

  bool insert(FeatureSet set) {
    const auto it = std::lower_bound(sets_.begin(), sets_.end(), set);
    if (it != sets_.end() && *it == set) return false;
    sets_.insert(it, std::move(set));
    return true;
  }

  bool contains(const FeatureSet& set) const {
    return std::binary_search(sets_.begin(), sets_.end(), set);
  }
  bool includes(const Model& other) const {
    return std::includes(sets_.begin(), sets_.end(), other.sets_.begin(),
                         other.sets_.end());
  }

  std::size_t size() const { return sets_.size(); }
  bool empty() const { return sets_.empty(); }
  auto begin() const { return sets_.begin(); }
  auto end() const { return sets_.end(); }
  std::span<const FeatureSet> sets() const { return sets_; }

  std::string label() const {
    std::string out = "{";
    for (std::size_t i = 0; i < sets_.size(); ++i) {
      if (i) out += ",";
      out += "{";
      const auto m = sets_[i].members();
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (j) out += ",";
        out += m[j];
      }
      out += "}";
    }
    return out + "}";
  }

  friend auto operator<=>(const Model&, const Model&) = default;
  friend bool operator==(const Model&, const Model&) = default;

 private:
  std::vector<FeatureSet> sets_;
};

/// Deterministic preference between equally scored models: fewer feature
/// sets first, then lexicographic order of the sorted feature sets.
inline bool tie_break_prefers(const Model& a, const Model& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

/// Symmetric relation over a domain of table event indices. The diagonal
/// marks events that participate (non-empty relevant values).
class SymmetricRelation {
 public:
  explicit SymmetricRelation(std::vector<std::size_t> domain)
      : domain_(std::move(domain)), bits_(domain_.size()) {
    if (!std::is_sorted(domain_.begin(), domain_.end()) ||
        std::adjacent_find(domain_.begin(), domain_.end()) != domain_.end()) {
      throw Error(ErrorCode::InvalidArgument,
                  "relation domain must be strictly increasing");
    }
  }

  std::span<const std::size_t> domain() const { return domain_; }
  std::size_t domain_size() const { return domain_.size(); }

  std::optional<std::size_t> local_index(std::size_t event) const {
    const auto it = std::lower_bound(domain_.begin(), domain_.end(), event);
    if (it == domain_.end() || *it != event) return std::nullopt;
    return static_cast<std::size_t>(it - domain_.begin());
  }

  /// Table-index query; events outside the domain relate to nothing.
  bool contains(std::size_t a, std::size_t b) const {
    const auto i = local_index(a);
    const auto j = local_index(b);
    return i && j && bits_.test(*i, *j);
  }
  bool participates(std::size_t event) const { return contains(event, event); }

  void relate_local(std::size_t i, std::size_t j) {
    bits_.set(i, j);
    bits_.set(j, i);
  }
  bool related_local(std::size_t i, std::size_t j) const { return bits_.test(i, j); }
  std::span<const std::uint64_t> row(std::size_t i) const { return bits_.row(i); }

  /// Unordered non-reflexive pairs as (smaller, larger) table indices.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < domain_.size(); ++i) {
      detail::for_each_bit(bits_.row(i), [&](std::size_t j) {
        if (j > i) out.emplace_back(domain_[i], domain_[j]);
      });
    }
    return out;
  }

  std::vector<std::size_t> participants() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < domain_.size(); ++i) {
      if (bits_.test(i, i)) out.push_back(domain_[i]);
    }
    return out;
  }

  friend bool operator==(const SymmetricRelation&, const SymmetricRelation&) = default;

 private:
  std::vector<std::size_t> domain_;
  detail::BitMatrix bits_;
};

namespace detail {

inline std::vector<std::size_t> full_domain(const EventTable& table) {
  std::vector<std::size_t> d(table.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = i;
  return d;
}

// value id -> events (table indices, ascending) carrying it.
inline std::vector<std::vector<std::size_t>> inverted_index(
    const EventTable& table, std::size_t feature) {
  std::vector<std::vector<std::size_t>> groups(table.dictionary_size(feature));
  for (std::size_t e = 0; e < table.size(); ++e) {
    for (ValueId v : table.values(e, feature)) groups[v].push_back(e);
  }
  return groups;
}

inline void add_atomic_pairs(const EventTable& table, std::size_t feature,
                             std::span<const std::size_t> domain,
                             SymmetricRelation& rel) {
  std::unordered_map<ValueId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < domain.size(); ++i) {
    for (ValueId v : table.values(domain[i], feature)) groups[v].push_back(i);
  }
  for (const auto& [value, members] : groups) {
    for (std::size_t x = 0; x < members.size(); ++x) {
      for (std::size_t y = x; y < members.size(); ++y) {
        rel.relate_local(members[x], members[y]);
      }
    }
  }
}

}  // namespace detail

/// Events related iff they share at least one value of `feature`.
inline SymmetricRelation atomic_relation(const EventTable& table,
                                         std::size_t feature,
                                         std::vector<std::size_t> domain) {
  SymmetricRelation rel(std::move(domain));
  detail::add_atomic_pairs(table, feature, rel.domain(), rel);
  return rel;
}

inline SymmetricRelation atomic_relation(const EventTable& table,
                                         std::string_view feature) {
  return atomic_relation(table, table.require_feature(feature),
                         detail::full_domain(table));
}

/// Union of the two atomic relations plus every (a, d) bridged by exactly
/// one third atomic feature Xj through events b != c:
///   a ~fi b,  b ~Xj c,  c ~fk d.
/// Bridging events range over the whole table, not only the domain.
inline SymmetricRelation derived_relation(const EventTable& table,
                                          std::size_t fi, std::size_t fk,
                                          std::vector<std::size_t> domain) {
  if (fi == fk) {
    throw Error(ErrorCode::InvalidArgument,
                "derived relation needs two distinct features");
  }
  SymmetricRelation rel(std::move(domain));
  const auto dom = rel.domain();
  detail::add_atomic_pairs(table, fi, dom, rel);
  detail::add_atomic_pairs(table, fk, dom, rel);

  const std::size_t m = table.num_features();
  std::vector<std::vector<std::vector<std::size_t>>> index(m);
  for (std::size_t f = 0; f < m; ++f) index[f] = detail::inverted_index(table, f);

  // Domain members grouped by their fk values, for the final hop c ~fk d.
  std::unordered_map<ValueId, std::vector<std::size_t>> fk_members;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    for (ValueId v : table.values(dom[i], fk)) fk_members[v].push_back(i);
  }

  std::vector<char> bridged_c(table.size());
  std::vector<char> seen_b(table.size());
  std::vector<char> reached_value(table.dictionary_size(fk));
  for (std::size_t ia = 0; ia < dom.size(); ++ia) {
    std::fill(bridged_c.begin(), bridged_c.end(), 0);
    std::fill(seen_b.begin(), seen_b.end(), 0);
    std::fill(reached_value.begin(), reached_value.end(), 0);
    for (ValueId va : table.values(dom[ia], fi)) {
      for (std::size_t b : index[fi][va]) {
        if (seen_b[b]) continue;
        seen_b[b] = 1;
        for (std::size_t j = 0; j < m; ++j) {
          if (j == fi || j == fk) continue;
          for (ValueId vb : table.values(b, j)) {
            for (std::size_t c : index[j][vb]) {
              if (c != b) bridged_c[c] = 1;
            }
          }
        }
      }
    }
    for (std::size_t c = 0; c < table.size(); ++c) {
      if (!bridged_c[c]) continue;
      for (ValueId vc : table.values(c, fk)) reached_value[vc] = 1;
    }
    for (ValueId v = 0; v < reached_value.size(); ++v) {
      if (!reached_value[v]) continue;
      const auto it = fk_members.find(v);
      if (it == fk_members.end()) continue;
      for (std::size_t id : it->second) rel.relate_local(ia, id);
    }
  }
  return rel;
}

inline SymmetricRelation derived_relation(const EventTable& table,
                                          std::string_view fi,
                                          std::string_view fk) {
  return derived_relation(table, table.require_feature(fi),
                          table.require_feature(fk), detail::full_domain(table));
}

inline SymmetricRelation relation_for(const EventTable& table,
                                      const FeatureSet& set,
                                      std::vector<std::size_t> domain) {
  const auto m = set.members();
  if (set.is_atomic()) {
    return atomic_relation(table, table.require_feature(m[0]), std::move(domain));
  }
  return derived_relation(table, table.require_feature(m[0]),
                          table.require_feature(m[1]), std::move(domain));
}

/// Per-domain relation cache keyed by feature set; safe for concurrent
/// insert-or-get.
class RelationCache {
 public:
  RelationCache(const EventTable& table, std::vector<std::size_t> domain)
      : table_(&table), domain_(std::move(domain)) {}

  explicit RelationCache(const Observation& obs)
      : RelationCache(obs.parent(),
                      std::vector<std::size_t>(obs.members().begin(),
                                               obs.members().end())) {}

  const EventTable& table() const { return *table_; }
  std::span<const std::size_t> domain() const { return domain_; }

  std::shared_ptr<const SymmetricRelation> get(const FeatureSet& set) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(set); it != cache_.end()) return it->second;
    }
    auto computed =
        std::make_shared<const SymmetricRelation>(relation_for(*table_, set, domain_));
    std::lock_guard lock(mutex_);
    return cache_.try_emplace(set, std::move(computed)).first->second;
  }

 private:
  const EventTable* table_;
  std::vector<std::size_t> domain_;
  std::mutex mutex_;
  std::map<FeatureSet, std::shared_ptr<const SymmetricRelation>> cache_;
};

using EventPair = std::pair<std::size_t, std::size_t>;
using RelationMap = std::map<FeatureSet, SymmetricRelation>;

namespace detail {

// Pairs (order[x], order[y]) with x < y related by any of `rels`.
inline std::vector<EventPair> generate_pairs(
    std::span<const std::size_t> order,
    std::span<const SymmetricRelation* const> rels) {
  std::vector<EventPair> out;
  if (rels.empty()) return out;

  const bool aligned = std::all_of(rels.begin(), rels.end(), [&](const auto* r) {
    return std::equal(order.begin(), order.end(), r->domain().begin(),
                      r->domain().end());
  });
  if (aligned) {
    std::vector<std::uint64_t> acc(detail::words_for(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::fill(acc.begin(), acc.end(), 0);
      for (const auto* r : rels) {
        const auto row = r->row(i);
        for (std::size_t w = 0; w < acc.size(); ++w) acc[w] |= row[w];
      }
      detail::for_each_bit(acc, [&](std::size_t j) {
        if (j > i) out.emplace_back(order[i], order[j]);
      });
    }
    return out;
  }
  for (std::size_t x = 0; x < order.size(); ++x) {
    for (std::size_t y = x + 1; y < order.size(); ++y) {
      for (const auto* r : rels) {
        if (r->contains(order[x], order[y])) {
          out.emplace_back(order[x], order[y]);
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Ordered pairs (a, b) with a before b in `order` and a ~X b for some X
/// in the model. `order` is any sequence of distinct table indices.
inline std::vector<EventPair> df_path_generator(std::span<const std::size_t> order,
                                                const Model& model,
                                                const RelationMap& relations) {
  std::vector<const SymmetricRelation*> rels;
  for (const auto& set : model) {
    const auto it = relations.find(set);
    if (it == relations.end()) {
      throw Error(ErrorCode::MissingRelation,
                  "no relation supplied for feature set " + set.label());
    }
    rels.push_back(&it->second);
  }
  return detail::generate_pairs(order, rels);
}

inline std::vector<EventPair> df_path_generator(const Observation& obs,
                                                const Model& model,
                                                RelationCache& cache) {
  std::vector<std::shared_ptr<const SymmetricRelation>> owned;
  std::vector<const SymmetricRelation*> rels;
  for (const auto& set : model) {
    owned.push_back(cache.get(set));
    rels.push_back(owned.back().get());
  }
  return detail::generate_pairs(obs.members(), rels);
}

}  // namespace ekgdisc
