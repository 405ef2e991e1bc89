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

// Greedy Graclus matching and the pooling/unpooling it induces.

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "lcslab/ad/ops.hpp"
#include "lcslab/graph/graph.hpp"
#include "lcslab/rng.hpp"

namespace lcslab::models {

struct PoolRecord {
  std::vector<std::uint32_t> assignment;  // fine node -> coarse node
  std::uint32_t coarse_count = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // merged (visited, partner)
};

namespace detail {

template <typename T>
double cosine(std::span<const T> a, std::span<const T> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

/// Matches nodes visiting them in `order`: each still-unmarked node pairs with
/// its most cosine-similar unmarked neighbour (ties to the lowest id) or stays
/// a singleton. Coarse ids follow the smallest member id.
template <typename T>
PoolRecord graclus_match(const Graph& g, const Matrix<T>& features,
                         std::span<const std::uint32_t> order) {
  const std::uint32_t n = g.num_nodes;
  ad::detail::require(features.rows() == n, "graclus", "one feature row per node required");
  ad::detail::require(order.size() == n, "graclus", "visit order must list every node");
  const auto adj = g.adjacency();
  std::vector<std::uint32_t> partner(n, UINT32_MAX);
  std::vector<char> marked(n, 0);
  PoolRecord rec;
  for (std::uint32_t v : order) {
    ad::detail::require(v < n, "graclus", "visit order names an unknown node");
    if (marked[v]) continue;
    marked[v] = 1;
    std::uint32_t best = UINT32_MAX;
    double best_sim = 0.0;
    for (std::uint32_t u : adj[v]) {  // ascending ids, so ties keep the lowest
      if (marked[u]) continue;
      const double sim = detail::cosine(features.row(v), features.row(u));
      if (best == UINT32_MAX || sim > best_sim) {
        best = u;
        best_sim = sim;
      }
    }
    partner[v] = v;
    if (best != UINT32_MAX) {
      marked[best] = 1;
      partner[v] = best;
      partner[best] = v;
      rec.pairs.emplace_back(v, best);
    }
  }
  rec.assignment.assign(n, UINT32_MAX);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (rec.assignment[v] != UINT32_MAX) continue;
    rec.assignment[v] = rec.coarse_count;
    rec.assignment[partner[v]] = rec.coarse_count;
    ++rec.coarse_count;
  }
  return rec;
}

/// Matching with a uniformly shuffled visit order.
template <typename T>
PoolRecord graclus_match(const Graph& g, const Matrix<T>& features, Rng& rng) {
  std::vector<std::uint32_t> order(g.num_nodes);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(std::span<std::uint32_t>(order));
  return graclus_match(g, features, std::span<const std::uint32_t>(order));
}

/// Image of the fine edges under the assignment, deduplicated.
inline Graph coarsen(const Graph& g, const PoolRecord& rec) {
  if (rec.assignment.size() != g.num_nodes) {
    throw ValidationError("pool record does not match the graph");
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (auto [a, b] : g.undirected_pairs()) {
    const std::uint32_t ca = rec.assignment[a], cb = rec.assignment[b];
    pairs.emplace_back(std::min(ca, cb), std::max(ca, cb));
  }
  return Graph::from_pairs(rec.coarse_count, pairs, false);
}

/// Coarse features: mean of the members.
template <typename T>
ad::Var<T> graclus_pool(ad::Var<T> x, const PoolRecord& rec) {
  ad::detail::require(x.rows() == rec.assignment.size(), "graclus_pool",
                      "feature rows do not match the pool record");
  return ad::segment_mean(x, rec.assignment, rec.coarse_count);
}

/// Fine features: each node copies its coarse node's row.
template <typename T>
ad::Var<T> graclus_unpool(ad::Var<T> coarse, const PoolRecord& rec) {
  ad::detail::require(coarse.rows() == rec.coarse_count, "graclus_unpool",
                      "coarse rows do not match the pool record");
  return ad::gather_rows(coarse, rec.assignment);
}

}  // namespace lcslab::models
