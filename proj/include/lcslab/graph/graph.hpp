// Copyright 2026 The lcslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lcslab/error.hpp"

namespace lcslab {

/// Directed edge list of an undirected graph. Each undirected edge {s, t} is
/// stored as both (s -> t) and (t -> s); self-loops appear once. Edges are
/// sorted by (dst, src), so message aggregation at a node always runs over its
/// neighbours in ascending id order.
struct Graph {
  std::uint32_t num_nodes = 0;
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;

  std::size_t num_edges() const { return src.size(); }

  friend bool operator==(const Graph&, const Graph&) = default;

  /// Builds a canonical graph from undirected pairs; duplicates are dropped.
  static Graph from_pairs(std::uint32_t n,
                          std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
                          bool add_self_loops) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> directed;  // (dst, src)
    directed.reserve(2 * pairs.size() + n);
    for (auto [a, b] : pairs) {
      if (a >= n || b >= n) throw ValidationError("edge endpoint out of range");
      directed.emplace_back(b, a);
      if (a != b) directed.emplace_back(a, b);
    }
    if (add_self_loops) {
      for (std::uint32_t i = 0; i < n; ++i) directed.emplace_back(i, i);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());
    Graph g;
    g.num_nodes = n;
    g.src.reserve(directed.size());
    g.dst.reserve(directed.size());
    for (auto [d, s] : directed) {
      g.dst.push_back(d);
      g.src.push_back(s);
    }
    return g;
  }

  /// Undirected pairs (s <= t), self-loops included.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> undirected_pairs() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    for (std::size_t e = 0; e < src.size(); ++e) {
      if (src[e] <= dst[e]) out.emplace_back(src[e], dst[e]);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool has_all_self_loops() const {
    std::vector<char> seen(num_nodes, 0);
    for (std::size_t e = 0; e < src.size(); ++e) {
      if (src[e] == dst[e]) seen[src[e]] = 1;
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  }

  /// In-degree counting the self-loop.
  std::vector<std::uint32_t> degrees() const {
    std::vector<std::uint32_t> deg(num_nodes, 0);
    for (std::uint32_t d : dst) ++deg[d];
    return deg;
  }

  /// Neighbours of each node, excluding itself, ascending.
  std::vector<std::vector<std::uint32_t>> adjacency() const {
    std::vector<std::vector<std::uint32_t>> adj(num_nodes);
    for (std::size_t e = 0; e < src.size(); ++e) {
      if (src[e] != dst[e]) adj[dst[e]].push_back(src[e]);
    }
    return adj;
  }
};

/// Relabels nodes: node i of `g` becomes perm[i].
inline Graph permute(const Graph& g, std::span<const std::uint32_t> perm) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (auto [a, b] : g.undirected_pairs()) pairs.emplace_back(perm[a], perm[b]);
  return Graph::from_pairs(g.num_nodes, pairs, false);
}

/// Disjoint union; returns the node offset of each part.
inline std::pair<Graph, std::vector<std::uint32_t>> disjoint_union(
    std::span<const Graph* const> parts) {
  Graph out;
  std::vector<std::uint32_t> offsets;
  for (const Graph* g : parts) {
    offsets.push_back(out.num_nodes);
    for (std::size_t e = 0; e < g->num_edges(); ++e) {
      out.src.push_back(g->src[e] + out.num_nodes);
      out.dst.push_back(g->dst[e] + out.num_nodes);
    }
    out.num_nodes += g->num_nodes;
  }
  return {std::move(out), std::move(offsets)};
}

}  // namespace lcslab
