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

// Object graphs: per-segment node features over a region adjacency graph.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lcslab/core/binary_io.hpp"
#include "lcslab/core/types.hpp"
#include "lcslab/graph/graph.hpp"
#include "lcslab/matrix.hpp"

namespace lcslab {

/// Per-segment descriptors, one row per segment. Column layout:
///   [ mean(F) | min(F) | max(F) | std(F) | size | radial mean | radial std ]
/// The last six blocks are present only when `with_var_geom` is set, giving
/// D = F or D = 4F + 3.
struct NodeFeatures {
  Matrix<float> values;
  std::uint32_t feature_channels = 0;
  bool with_var_geom = false;

  std::size_t dim() const { return values.cols(); }
};

/// Node feature dimension for F input channels.
constexpr std::uint32_t node_feature_dim(std::uint32_t channels, bool with_var_geom) {
  return with_var_geom ? 4 * channels + 3 : channels;
}

/// Spectral variability and geometry are only informative when segments span
/// several pixels, and are skipped for externally learned feature maps.
constexpr bool default_var_geom(std::uint32_t min_segment_size, bool raw_image_input) {
  return min_segment_size > 1 && raw_image_input;
}

/// Computes node features of every segment. Standard deviations are population
/// statistics; geometry uses pixel-centre (row, col) coordinates in pixels.
inline NodeFeatures node_features(const Raster& features, const SegmentMap& seg,
                                  bool with_var_geom) {
  if (features.height != seg.height() || features.width != seg.width()) {
    throw ValidationError("feature map and segment map shapes differ");
  }
  validate_segments(seg);
  const std::uint32_t S = seg.count;
  const std::uint32_t F = features.channels;
  const std::size_t plane = features.pixels();

  std::vector<double> count(S, 0.0), sum(std::size_t{S} * F, 0.0), lo(std::size_t{S} * F, INFINITY),
      hi(std::size_t{S} * F, -INFINITY), rsum(S, 0.0), csum(S, 0.0);
  for (std::uint32_t r = 0; r < seg.height(); ++r) {
    for (std::uint32_t c = 0; c < seg.width(); ++c) {
      const std::uint32_t s = seg(r, c);
      const std::size_t p = std::size_t{r} * seg.width() + c;
      count[s] += 1.0;
      rsum[s] += r;
      csum[s] += c;
      for (std::uint32_t f = 0; f < F; ++f) {
        const double v = features.values[f * plane + p];
        const std::size_t i = std::size_t{s} * F + f;
        sum[i] += v;
        lo[i] = std::min(lo[i], v);
        hi[i] = std::max(hi[i], v);
      }
    }
  }

  NodeFeatures out;
  out.feature_channels = F;
  out.with_var_geom = with_var_geom;
  out.values = Matrix<float>(S, node_feature_dim(F, with_var_geom));
  for (std::uint32_t s = 0; s < S; ++s) {
    for (std::uint32_t f = 0; f < F; ++f) {
      out.values(s, f) = static_cast<float>(sum[std::size_t{s} * F + f] / count[s]);
    }
  }
  if (!with_var_geom) return out;

  // Deviations are accumulated around the first-pass means (two-pass variance),
  // so constant segments give exactly zero spread.
  std::vector<double> dev(std::size_t{S} * F, 0.0), dsum(S, 0.0), dspread(S, 0.0);
  auto radial = [&](std::uint32_t s, std::uint32_t r, std::uint32_t c) {
    const double dr = r - rsum[s] / count[s];
    const double dc = c - csum[s] / count[s];
    return std::sqrt(dr * dr + dc * dc);
  };
  for (std::uint32_t r = 0; r < seg.height(); ++r) {
    for (std::uint32_t c = 0; c < seg.width(); ++c) {
      const std::uint32_t s = seg(r, c);
      const std::size_t p = std::size_t{r} * seg.width() + c;
      for (std::uint32_t f = 0; f < F; ++f) {
        const std::size_t i = std::size_t{s} * F + f;
        const double d = features.values[f * plane + p] - sum[i] / count[s];
        dev[i] += d * d;
      }
      dsum[s] += radial(s, r, c);
    }
  }
  for (std::uint32_t r = 0; r < seg.height(); ++r) {
    for (std::uint32_t c = 0; c < seg.width(); ++c) {
      const std::uint32_t s = seg(r, c);
      const double d = radial(s, r, c) - dsum[s] / count[s];
      dspread[s] += d * d;
    }
  }
  const double total = static_cast<double>(plane);
  for (std::uint32_t s = 0; s < S; ++s) {
    auto row = out.values.row(s);
    for (std::uint32_t f = 0; f < F; ++f) {
      const std::size_t i = std::size_t{s} * F + f;
      row[F + f] = static_cast<float>(lo[i]);
      row[2 * F + f] = static_cast<float>(hi[i]);
      row[3 * F + f] = static_cast<float>(std::sqrt(dev[i] / count[s]));
    }
    row[4 * F] = static_cast<float>(count[s] / total);
    row[4 * F + 1] = static_cast<float>(dsum[s] / count[s]);
    row[4 * F + 2] = static_cast<float>(std::sqrt(dspread[s] / count[s]));
  }
  return out;
}

/// Region adjacency edges: segments sharing a 4-neighbour pixel boundary, plus
/// a self-loop on every segment.
inline Graph rag_edges(const SegmentMap& seg) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t r = 0; r < seg.height(); ++r) {
    for (std::uint32_t c = 0; c < seg.width(); ++c) {
      const std::uint32_t a = seg(r, c);
      if (c + 1 < seg.width() && seg(r, c + 1) != a) {
        pairs.emplace_back(std::min(a, seg(r, c + 1)), std::max(a, seg(r, c + 1)));
      }
      if (r + 1 < seg.height() && seg(r + 1, c) != a) {
        pairs.emplace_back(std::min(a, seg(r + 1, c)), std::max(a, seg(r + 1, c)));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return Graph::from_pairs(seg.count, pairs, true);
}

/// G_F = (V, E) plus the segment map it was built from.
struct ObjectGraph {
  Graph graph;
  NodeFeatures nodes;
  SegmentMap segments;
};

inline ObjectGraph build_rag(const SegmentMap& seg, NodeFeatures nodes) {
  if (nodes.values.rows() != seg.count) {
    throw ValidationError("node feature rows (" + std::to_string(nodes.values.rows()) +
                          ") do not match segment count (" + std::to_string(seg.count) + ")");
  }
  return {rag_edges(seg), std::move(nodes), seg};
}

/// Broadcasts per-node rows back to pixels: row p of the result (row-major
/// pixel index) is the prediction of the pixel's segment.
template <typename T>
Matrix<T> nodes_to_pixels(const Matrix<T>& node_rows, const SegmentMap& seg) {
  if (node_rows.rows() != seg.count) {
    throw ValidationError("prediction rows (" + std::to_string(node_rows.rows()) +
                          ") do not match segment count (" + std::to_string(seg.count) + ")");
  }
  Matrix<T> out(seg.ids.size(), node_rows.cols());
  for (std::size_t p = 0; p < seg.ids.size(); ++p) {
    const auto src = node_rows.row(seg.ids.data[p]);
    std::copy(src.begin(), src.end(), out.row(p).begin());
  }
  return out;
}

/// Graph dump for external tooling: `<stem>.edges.txt` lists one undirected
/// edge `s t` per line (self-loops included); `<stem>.nodes.bin` holds rows u32,
/// cols u32 and the float32 node matrix row-major.
inline void write_graph_dump(const ObjectGraph& g, const std::filesystem::path& stem) {
  std::ostringstream edges;
  for (auto [a, b] : g.graph.undirected_pairs()) edges << a << ' ' << b << '\n';
  io::write_text(stem.string() + ".edges.txt", edges.str());
  io::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(g.nodes.values.rows()));
  w.u32(static_cast<std::uint32_t>(g.nodes.values.cols()));
  for (float v : g.nodes.values.values()) w.f32(v);
  io::write_file(stem.string() + ".nodes.bin", w.buffer());
}

}  // namespace lcslab
