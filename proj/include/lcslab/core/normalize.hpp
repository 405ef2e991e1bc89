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
#include <vector>

#include "lcslab/core/types.hpp"

namespace lcslab {

/// Default reflectance divisors. Channels are ordered (red, green, blue, NIR):
/// 3000 for the visible bands, 7000 for NIR when four channels are present.
inline std::vector<float> default_divisors(std::uint32_t channels) {
  std::vector<float> d(channels, 3000.0f);
  if (channels == 4) d[3] = 7000.0f;
  return d;
}

/// Converts a raw (C, H, W) integer raster into an ImagePatch by dividing each
/// channel by its divisor and clipping to [0, 1].
///
/// Temporal compositing of the raw input (a per-pixel 25th percentile over the
/// cloud-free acquisitions of a year) is expected to have happened upstream.
inline ImagePatch normalize_s2(std::span<const std::int32_t> raw,
                               std::uint32_t channels, std::uint32_t height,
                               std::uint32_t width, std::span<const float> divisors) {
  if (divisors.size() != channels) {
    throw ConfigError("expected " + std::to_string(channels) + " divisors, got " +
                      std::to_string(divisors.size()));
  }
  for (float d : divisors) {
    if (!(d > 0.0f)) throw ConfigError("normalization divisors must be positive");
  }
  ImagePatch out(channels, height, width);
  if (raw.size() != out.values.size()) {
    throw ValidationError("raw raster size does not match (C, H, W)");
  }
  const std::size_t plane = out.pixels();
  for (std::uint32_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      const std::int32_t v = raw[c * plane + i];
      if (v < 0) throw ValidationError("raw reflectance values must be non-negative");
      out.values[c * plane + i] =
          std::clamp(static_cast<float>(v) / divisors[c], 0.0f, 1.0f);
    }
  }
  return out;
}

inline ImagePatch normalize_s2(std::span<const std::int32_t> raw,
                               std::uint32_t channels, std::uint32_t height,
                               std::uint32_t width) {
  const auto d = default_divisors(channels);
  return normalize_s2(raw, channels, height, width, d);
}

}  // namespace lcslab
