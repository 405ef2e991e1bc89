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

// Object definition: pixel-trivial segments or Felzenszwalb-Huttenlocher
// oversegmentation with a minimum segment size.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "lcslab/core/binary_io.hpp"
#include "lcslab/core/types.hpp"
#include "lcslab/segment/disjoint_set.hpp"

namespace lcslab {

enum class SegmentationMode { kTrivial, kFh };

struct SegmentationConfig {
  SegmentationMode mode = SegmentationMode::kTrivial;
  /// Minimum segment size in pixels (the minimum mapping unit).
  std::uint32_t min_size = 1;
  /// FH scale parameter; larger values favour larger segments.
  double k = 0.5;

  /// trivial for min_size 1, fh otherwise.
  static SegmentationConfig for_mmu(std::uint32_t min_size, double k = 0.5) {
    return {min_size <= 1 ? SegmentationMode::kTrivial : SegmentationMode::kFh,
            std::max(min_size, 1u), k};
  }

  /// Minimum segment size the resulting map guarantees.
  std::uint32_t mmu() const { return mode == SegmentationMode::kTrivial ? 1 : min_size; }
};

/// One segment per pixel, id = row * W + col.
inline SegmentMap trivial_segment(std::uint32_t height, std::uint32_t width) {
  SegmentMap seg;
  seg.ids = Grid<std::uint32_t>(height, width);
  std::iota(seg.ids.data.begin(), seg.ids.data.end(), 0u);
  seg.count = height * width;
  return seg;
}

inline SegmentMap trivial_segment(const Raster& input) {
  return trivial_segment(input.height, input.width);
}

/// Renumbers root ids contiguously in first-pixel raster order.
inline SegmentMap relabel(DisjointSet& sets, std::uint32_t height, std::uint32_t width) {
  SegmentMap seg;
  seg.ids = Grid<std::uint32_t>(height, width);
  const std::uint32_t n = height * width;
  std::vector<std::uint32_t> remap(n, UINT32_MAX);
  std::uint32_t next = 0;
  for (std::uint32_t p = 0; p < n; ++p) {
    const std::uint32_t root = sets.find(p);
    if (remap[root] == UINT32_MAX) remap[root] = next++;
    seg.ids.data[p] = remap[root];
  }
  seg.count = next;
  return seg;
}

namespace detail {

struct PixelEdge {
  double w;
  std::uint32_t a;  // first endpoint (row-major pixel index)
  std::uint32_t b;
};

/// 4-neighbour edges in (row, col, direction) order: right then down.
inline std::vector<PixelEdge> grid_edges(const Raster& input) {
  const std::uint32_t h = input.height;
  const std::uint32_t w = input.width;
  const std::size_t plane = input.pixels();
  auto dist = [&](std::uint32_t p, std::uint32_t q) {
    double d2 = 0.0;
    for (std::uint32_t c = 0; c < input.channels; ++c) {
      const double d = static_cast<double>(input.values[c * plane + p]) -
                       static_cast<double>(input.values[c * plane + q]);
      d2 += d * d;
    }
    return std::sqrt(d2);
  };
  std::vector<PixelEdge> edges;
  edges.reserve(2 * plane);
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      const std::uint32_t p = r * w + c;
      if (c + 1 < w) edges.push_back({dist(p, p + 1), p, p + 1});
      if (r + 1 < h) edges.push_back({dist(p, p + w), p, p + w});
    }
  }
  // Stable sort keeps the (row, col, direction) generation order among ties.
  std::stable_sort(edges.begin(), edges.end(),
                   [](const PixelEdge& x, const PixelEdge& y) { return x.w < y.w; });
  return edges;
}

}  // namespace detail

/// Felzenszwalb-Huttenlocher segmentation on a 4-connected pixel grid.
///
/// Edge weight is the Euclidean distance between the channel vectors of two
/// neighbouring pixels. Components C1, C2 are merged across an edge of weight w
/// when w <= min(Int(C1) + k/|C1|, Int(C2) + k/|C2|). A second sweep over the
/// sorted edges then merges every component smaller than `min_size` into the
/// neighbour across its cheapest boundary edge. No pre-smoothing is applied.
inline SegmentMap fh_segment(const Raster& input, const SegmentationConfig& cfg) {
  if (input.height == 0 || input.width == 0 || input.channels == 0 ||
      input.values.size() != std::size_t{input.channels} * input.pixels()) {
    throw ValidationError("fh_segment needs a non-empty raster");
  }
  if (!(cfg.k > 0.0)) throw ConfigError("FH scale parameter k must be positive");
  if (cfg.min_size < 1) throw ConfigError("minimum segment size must be at least 1");

  const auto edges = detail::grid_edges(input);
  const std::size_t n = input.pixels();
  DisjointSet sets(n);
  std::vector<double> threshold(n, cfg.k);

  for (const auto& e : edges) {
    std::uint32_t a = sets.find(e.a);
    std::uint32_t b = sets.find(e.b);
    if (a == b) continue;
    if (e.w <= threshold[a] && e.w <= threshold[b]) {
      const std::uint32_t root = sets.join(a, b);
      // Edges arrive in ascending order, so e.w is the new internal difference.
      threshold[root] = e.w + cfg.k / sets.size(root);
    }
  }

  // Sizes only grow, so one sweep leaves no undersized component that still has
  // a boundary edge; the loop guards the invariant regardless.
  bool changed = cfg.min_size > 1;
  while (changed) {
    changed = false;
    for (const auto& e : edges) {
      const std::uint32_t a = sets.find(e.a);
      const std::uint32_t b = sets.find(e.b);
      if (a != b && (sets.size(a) < cfg.min_size || sets.size(b) < cfg.min_size)) {
        sets.join(a, b);
        changed = true;
      }
    }
  }
  return relabel(sets, input.height, input.width);
}

inline SegmentMap segment(const Raster& input, const SegmentationConfig& cfg) {
  return cfg.mode == SegmentationMode::kTrivial ? trivial_segment(input)
                                                : fh_segment(input, cfg);
}

/// Segment map file: H u32, W u32, then H*W u32 ids row-major (little-endian).
inline std::vector<std::uint8_t> encode_segment_map(const SegmentMap& seg) {
  io::ByteWriter w;
  w.u32(seg.height());
  w.u32(seg.width());
  for (std::uint32_t id : seg.ids.data) w.u32(id);
  return w.buffer();
}

inline void write_segment_map(const SegmentMap& seg, const std::filesystem::path& path) {
  io::write_file(path, encode_segment_map(seg));
}

inline SegmentMap read_segment_map(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  const std::uint32_t h = r.u32();
  const std::uint32_t w = r.u32();
  SegmentMap seg;
  seg.ids = Grid<std::uint32_t>(h, w);
  std::uint32_t max_id = 0;
  for (auto& id : seg.ids.data) {
    id = r.u32();
    max_id = std::max(max_id, id);
  }
  seg.count = seg.ids.data.empty() ? 0 : max_id + 1;
  validate_segments(seg);
  return seg;
}

}  // namespace lcslab
