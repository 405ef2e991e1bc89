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

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lcslab/error.hpp"

namespace lcslab {

/// Pixels within this distance of the patch border never carry labels and are
/// ignored by every metric.
inline constexpr std::uint32_t kBorder = 5;

/// Channel-major (C, H, W) float raster. Used both for image patches (values in
/// [0, 1]) and for externally produced feature maps (any finite values).
struct Raster {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> values;

  Raster() = default;
  Raster(std::uint32_t c, std::uint32_t h, std::uint32_t w, float fill = 0.0f)
      : channels(c), height(h), width(w),
        values(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }

  float& at(std::uint32_t c, std::uint32_t r, std::uint32_t col) {
    return values[(static_cast<std::size_t>(c) * height + r) * width + col];
  }
  float at(std::uint32_t c, std::uint32_t r, std::uint32_t col) const {
    return values[(static_cast<std::size_t>(c) * height + r) * width + col];
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

using ImagePatch = Raster;
using FeatureMap = Raster;

/// Checks the image-patch invariants: minimum size, finite values in [0, 1].
inline void validate_patch(const ImagePatch& p) {
  if (p.height < 16 || p.width < 16) {
    throw ValidationError("image patch must be at least 16x16, got " +
                          std::to_string(p.height) + "x" + std::to_string(p.width));
  }
  if (p.values.size() != static_cast<std::size_t>(p.channels) * p.pixels()) {
    throw ValidationError("image patch value count does not match its shape");
  }
  for (float v : p.values) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ValidationError("image patch values must be finite and within [0, 1]");
    }
  }
}

/// Single-channel H x W grid, row-major.
template <typename T>
struct Grid {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(std::uint32_t h, std::uint32_t w, T fill = T{})
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t size() const { return data.size(); }
  T& operator()(std::uint32_t r, std::uint32_t c) {
    return data[static_cast<std::size_t>(r) * width + c];
  }
  const T& operator()(std::uint32_t r, std::uint32_t c) const {
    return data[static_cast<std::size_t>(r) * width + c];
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Per-pixel class ids (predictions or ground truth).
using ClassMap = Grid<std::uint16_t>;

/// Pixel -> segment id map; ids are contiguous in [0, count).
struct SegmentMap {
  Grid<std::uint32_t> ids;
  std::uint32_t count = 0;

  std::uint32_t height() const { return ids.height; }
  std::uint32_t width() const { return ids.width; }
  std::uint32_t operator()(std::uint32_t r, std::uint32_t c) const { return ids(r, c); }

  /// Pixel count per segment.
  std::vector<std::uint32_t> sizes() const {
    std::vector<std::uint32_t> out(count, 0);
    for (std::uint32_t id : ids.data) ++out[id];
    return out;
  }

  friend bool operator==(const SegmentMap&, const SegmentMap&) = default;
};

/// Verifies ids lie in [0, count) and every id is used.
inline void validate_segments(const SegmentMap& seg) {
  if (seg.ids.data.size() != static_cast<std::size_t>(seg.height()) * seg.width()) {
    throw ValidationError("segment map size does not match its shape");
  }
  std::vector<char> seen(seg.count, 0);
  for (std::uint32_t id : seg.ids.data) {
    if (id >= seg.count) {
      throw ValidationError("segment id " + std::to_string(id) +
                            " outside [0, " + std::to_string(seg.count) + ")");
    }
    seen[id] = 1;
  }
  for (std::uint32_t s = 0; s < seg.count; ++s) {
    if (!seen[s]) {
      throw ValidationError("segment id " + std::to_string(s) +
                            " is empty (non-contiguous segment map)");
    }
  }
}

struct PointLabel {
  std::uint16_t row = 0;
  std::uint16_t col = 0;
  std::uint16_t cls = 0;

  friend bool operator==(const PointLabel&, const PointLabel&) = default;
};

/// Sparse point supervision for one patch.
struct SparseLabelSet {
  std::vector<PointLabel> points;
  std::uint16_t classes = 0;

  friend bool operator==(const SparseLabelSet&, const SparseLabelSet&) = default;
};

inline bool inside_border(std::uint32_t row, std::uint32_t col, std::uint32_t height,
                          std::uint32_t width) {
  return row >= kBorder && col >= kBorder && row + kBorder < height &&
         col + kBorder < width;
}

/// Enforces unique positions, class range and the border rule.
inline void validate_labels(const SparseLabelSet& labels, std::uint32_t height,
                            std::uint32_t width) {
  if (labels.classes < 2) {
    throw ValidationError("label set needs at least 2 classes");
  }
  std::set<std::pair<std::uint16_t, std::uint16_t>> positions;
  for (const auto& p : labels.points) {
    if (!inside_border(p.row, p.col, height, width)) {
      throw ValidationError("label at (" + std::to_string(p.row) + ", " +
                            std::to_string(p.col) + ") violates the " +
                            std::to_string(kBorder) + "px border rule");
    }
    if (p.cls >= labels.classes) {
      throw ValidationError("label class " + std::to_string(p.cls) +
                            " outside [0, " + std::to_string(labels.classes) + ")");
    }
    if (!positions.emplace(p.row, p.col).second) {
      throw ValidationError("duplicate label position (" + std::to_string(p.row) +
                            ", " + std::to_string(p.col) + ")");
    }
  }
}

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

struct Sample {
  ImagePatch image;
  SparseLabelSet labels;
  Split split = Split::kTrain;
  std::uint32_t group = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// A set of samples sharing K, C, H and W.
struct Dataset {
  std::uint16_t classes = 0;
  std::uint16_t channels = 0;
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::vector<Sample> samples;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Indices of the samples belonging to one split, in storage order.
inline std::vector<std::size_t> split_indices(const Dataset& d, Split s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    if (d.samples[i].split == s) out.push_back(i);
  }
  return out;
}

}  // namespace lcslab
