#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ekgdisc/detail/bit_matrix.hpp"
#include "ekgdisc/error.hpp"
#include "ekgdisc/event_table.hpp"
#include "ekgdisc/relations.hpp"

namespace ekgdisc {

using BigCount = boost::multiprecision::cpp_int;
using Edge = std::pair<std::size_t, std::size_t>;

/// Strict partial order on 0..n-1 given by a generating edge set; two posets
/// with the same transitive closure are order-equal.
class Poset {
 public:
  Poset() = default;

  /// `tags`, if non-empty, annotates each edge (parallel to `edges`).
  explicit Poset(std::size_t n, std::vector<Edge> edges = {},
                 std::vector<std::string> labels = {},
                 std::vector<std::string> tags = {})
      : n_(n), labels_(std::move(labels)) {
    if (!labels_.empty() && labels_.size() != n_) {
      throw Error(ErrorCode::InvalidArgument, "poset label count mismatch");
    }
    if (!tags.empty() && tags.size() != edges.size()) {
      throw Error(ErrorCode::InvalidArgument, "poset edge tag count mismatch");
    }
    std::vector<std::size_t> idx(edges.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](auto a, auto b) { return edges[a] < edges[b]; });
    for (std::size_t i : idx) {
      const auto [a, b] = edges[i];
      if (a >= n_ || b >= n_) {
        throw Error(ErrorCode::InvalidArgument, "poset edge out of range");
      }
      if (a == b) throw Error(ErrorCode::CyclicOrder, "poset edge is a self loop");
      if (!edges_.empty() && edges_.back() == edges[i]) continue;
      edges_.push_back(edges[i]);
      if (!tags.empty()) tags_.push_back(std::move(tags[i]));
    }
    succ_.assign(n_, {});
    pred_.assign(n_, {});
    for (const auto& [a, b] : edges_) {
      succ_[a].push_back(b);
      pred_[b].push_back(a);
    }
    topo_ = compute_topological_order();
  }

  std::size_t size() const { return n_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const std::string> tags() const { return tags_; }
  std::span<const std::string> labels() const { return labels_; }
  std::string label(std::size_t i) const {
    return labels_.empty() ? std::to_string(i) : labels_[i];
  }
  std::span<const std::size_t> successors(std::size_t v) const { return succ_[v]; }
  std::span<const std::size_t> predecessors(std::size_t v) const { return pred_[v]; }
  std::span<const std::size_t> topological_order() const { return topo_; }

  bool has_edge(std::size_t a, std::size_t b) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge{a, b});
  }

  /// reach.test(a, b) iff a precedes b in the closure.
  detail::BitMatrix closure() const {
    detail::BitMatrix reach(n_);
    for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
      const std::size_t v = *it;
      for (std::size_t s : succ_[v]) {
        reach.set(v, s);
        reach.or_row_into(s, reach.row(v));
      }
    }
    return reach;
  }

  /// Subposet on `vertices` (ascending), relabelled densely. Valid for any
  /// vertex set whose induced edges preserve the restricted closure, e.g.
  /// weak components.
  Poset induced(std::span<const std::size_t> vertices) const {
    std::vector<std::size_t> local(n_, n_);
    for (std::size_t i = 0; i < vertices.size(); ++i) local[vertices[i]] = i;
    std::vector<Edge> edges;
    std::vector<std::string> tags;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [a, b] = edges_[e];
      if (local[a] < n_ && local[b] < n_) {
        edges.emplace_back(local[a], local[b]);
        if (!tags_.empty()) tags.push_back(tags_[e]);
      }
    }
    std::vector<std::string> labels;
    for (std::size_t v : vertices) labels.push_back(label(v));
    return Poset(vertices.size(), std::move(edges), std::move(labels),
                 std::move(tags));
  }

 private:
  std::vector<std::size_t> compute_topological_order() const {
    std::vector<std::size_t> indeg(n_);
    for (const auto& e : edges_) ++indeg[e.second];
    std::vector<std::size_t> order;
    order.reserve(n_);
    for (std::size_t v = 0; v < n_; ++v) {
      if (indeg[v] == 0) order.push_back(v);
    }
    for (std::size_t head = 0; head < order.size(); ++head) {
      for (std::size_t s : succ_[order[head]]) {
        if (--indeg[s] == 0) order.push_back(s);
      }
    }
    if (order.size() != n_) {
      throw Error(ErrorCode::CyclicOrder, "poset edges contain a cycle");
    }
    return order;
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::string> tags_;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
  std::vector<std::size_t> topo_;
};

inline bool order_equal(const Poset& a, const Poset& b) {
  return a.size() == b.size() && a.closure() == b.closure();
}

/// Poset over the observation's events (in observed order) whose edges are
/// the df-path generator output. Edge tags name the inducing feature sets.
inline Poset build_poset(const Observation& obs, const Model& model,
                         RelationCache& cache, bool tag_edges = true) {
  const auto members = obs.members();
  const std::size_t n = members.size();
  std::vector<std::shared_ptr<const SymmetricRelation>> rels;
  for (const auto& set : model) rels.push_back(cache.get(set));

  const bool aligned = std::equal(members.begin(), members.end(),
                                  cache.domain().begin(), cache.domain().end());
  std::vector<Edge> edges;
  std::vector<std::string> tags;
  auto related = [&](const SymmetricRelation& r, std::size_t x, std::size_t y) {
    return aligned ? r.related_local(x, y) : r.contains(members[x], members[y]);
  };
  const auto sets = model.sets();
  if (aligned) {
    std::vector<std::uint64_t> acc(detail::words_for(n));
    for (std::size_t x = 0; x < n; ++x) {
      std::fill(acc.begin(), acc.end(), 0);
      for (const auto& r : rels) {
        const auto row = r->row(x);
        for (std::size_t w = 0; w < acc.size(); ++w) acc[w] |= row[w];
      }
      detail::for_each_bit(acc, [&](std::size_t y) {
        if (y > x) edges.emplace_back(x, y);
      });
    }
  } else {
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = x + 1; y < n; ++y) {
        for (const auto& r : rels) {
          if (related(*r, x, y)) {
            edges.emplace_back(x, y);
            break;
          }
        }
      }
    }
  }
  for (const auto& [x, y] : edges) {
    if (!tag_edges) break;
    std::string tag;
    for (std::size_t s = 0; s < rels.size(); ++s) {
      if (related(*rels[s], x, y)) {
        if (!tag.empty()) tag += "|";
        tag += sets[s].label();
      }
    }
    tags.push_back(std::move(tag));
  }
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t m : members) labels.push_back(obs.parent().event_id(m));
  return Poset(n, std::move(edges), std::move(labels), std::move(tags));
}

inline Poset build_poset(const Observation& obs, const Model& model) {
  RelationCache cache(obs);
  return build_poset(obs, model, cache);
}

/// Minimal edge set with the same closure; keeps labels and edge tags.
inline Poset transitive_reduction(const Poset& p) {
  const auto reach = p.closure();
  std::vector<std::uint64_t> implied(reach.words());
  std::vector<Edge> edges;
  std::vector<std::string> tags;
  const auto all_edges = p.edges();
  const auto all_tags = p.tags();
  std::size_t e = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    std::fill(implied.begin(), implied.end(), 0);
    for (std::size_t s : p.successors(a)) reach.or_row_into(s, implied);
    for (; e < all_edges.size() && all_edges[e].first == a; ++e) {
      const std::size_t b = all_edges[e].second;
      if ((implied[b / 64] >> (b % 64)) & 1U) continue;
      edges.push_back(all_edges[e]);
      if (!all_tags.empty()) tags.push_back(all_tags[e]);
    }
  }
  std::vector<std::string> labels(p.labels().begin(), p.labels().end());
  return Poset(p.size(), std::move(edges), std::move(labels), std::move(tags));
}

/// Weak components as ascending vertex lists, ordered by smallest vertex.
inline std::vector<std::vector<std::size_t>> component_vertex_sets(const Poset& p) {
  std::vector<std::size_t> comp(p.size(), p.size());
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < p.size(); ++start) {
    if (comp[start] != p.size()) continue;
    const std::size_t id = out.size();
    auto& members = out.emplace_back();
    std::vector<std::size_t> stack{start};
    comp[start] = id;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      members.push_back(v);
      auto visit = [&](std::size_t w) {
        if (comp[w] == p.size()) {
          comp[w] = id;
          stack.push_back(w);
        }
      };
      for (std::size_t w : p.successors(v)) visit(w);
      for (std::size_t w : p.predecessors(v)) visit(w);
    }
    std::sort(members.begin(), members.end());
  }
  return out;
}

inline std::vector<Poset> connected_components(const Poset& p) {
  std::vector<Poset> out;
  for (const auto& vs : component_vertex_sets(p)) out.push_back(p.induced(vs));
  return out;
}

inline std::vector<std::size_t> minimal_elements(const Poset& p) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < p.size(); ++v) {
    if (p.predecessors(v).empty()) out.push_back(v);
  }
  return out;
}

inline constexpr std::size_t kDefaultExactCeiling = 20;
inline constexpr std::size_t kMaxExactCeiling = 24;

/// Exact linear-extension count by dynamic programming over downsets
/// (bitmask states). Limited to `ceiling` elements.
inline BigCount count_extensions_exact(const Poset& p,
                                       std::size_t ceiling = kDefaultExactCeiling) {
  const std::size_t n = p.size();
  if (n > std::min(ceiling, kMaxExactCeiling)) {
    throw Error(ErrorCode::LimitExceeded,
                "exact counting ceiling exceeded: " + std::to_string(n) +
                    " elements");
  }
  if (n == 0) return 1;
  using Count = unsigned __int128;  // 24! < 2^80
  std::vector<std::uint32_t> pred_mask(n, 0);
  for (const auto& [a, b] : p.edges()) pred_mask[b] |= std::uint32_t{1} << a;

  const std::uint32_t full = n == 32 ? ~0U : (std::uint32_t{1} << n) - 1;
  std::vector<Count> ways(std::size_t{1} << n, 0);
  ways[0] = 1;
  for (std::uint32_t s = 0; s < full; ++s) {
    const Count w = ways[s];
    if (w == 0) continue;
    for (std::size_t x = 0; x < n; ++x) {
      const std::uint32_t bit = std::uint32_t{1} << x;
      if ((s & bit) == 0 && (pred_mask[x] & ~s) == 0) ways[s | bit] += w;
    }
  }
  const Count total = ways[full];
  BigCount out = static_cast<std::uint64_t>(total >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(total);
  return out;
}

}  // namespace ekgdisc
