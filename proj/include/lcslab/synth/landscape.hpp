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

// Synthetic Voronoi landscapes with point labels.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "lcslab/core/dataset.hpp"
#include "lcslab/core/types.hpp"
#include "lcslab/rng.hpp"

namespace lcslab::synth {

struct SynthConfig {
  std::uint16_t classes = 5;
  std::uint16_t height = 64;
  std::uint16_t width = 64;
  std::uint16_t channels = 4;
  std::uint32_t blobs = 12;
  /// K x C class spectral means, row-major. Empty -> drawn from the seed.
  std::vector<float> means;
  float sigma = 0.05f;
  std::uint32_t labels_per_patch = 1;
  std::uint64_t seed = 0;
  /// Minimum pairwise channel-space distance between generated means.
  float min_mean_gap = 0.3f;
};

struct Site {
  double row = 0.0;
  double col = 0.0;
  std::uint16_t cls = 0;
};

struct Landscape {
  ImagePatch image;
  ClassMap truth;
};

inline double mean_distance(const std::vector<float>& means, std::uint32_t channels,
                            std::uint32_t a, std::uint32_t b) {
  double d2 = 0.0;
  for (std::uint32_t c = 0; c < channels; ++c) {
    const double d = means[a * channels + c] - means[b * channels + c];
    d2 += d * d;
  }
  return std::sqrt(d2);
}

/// Draws K well separated spectral means (rejection sampling in [0.1, 0.9]^C).
inline std::vector<float> draw_means(std::uint16_t classes, std::uint16_t channels,
                                     float min_gap, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x3ea5));
  std::vector<float> means;
  for (int attempt = 0; attempt < 100000 && means.size() < std::size_t{classes} * channels;
       ++attempt) {
    std::vector<float> cand(channels);
    for (auto& v : cand) v = static_cast<float>(rng.uniform(0.1, 0.9));
    bool ok = true;
    const std::uint32_t have = static_cast<std::uint32_t>(means.size() / channels);
    for (std::uint32_t k = 0; k < have && ok; ++k) {
      double d2 = 0.0;
      for (std::uint32_t c = 0; c < channels; ++c) {
        const double d = means[k * channels + c] - cand[c];
        d2 += d * d;
      }
      ok = std::sqrt(d2) >= min_gap;
    }
    if (ok) means.insert(means.end(), cand.begin(), cand.end());
  }
  if (means.size() != std::size_t{classes} * channels) {
    throw ConfigError("cannot place " + std::to_string(classes) +
                      " class means with the requested minimum gap");
  }
  return means;
}

/// Validates the config and fills in generated means when none were given.
inline SynthConfig resolve(SynthConfig cfg) {
  if (cfg.blobs < 1) throw ConfigError("blob count must be at least 1");
  if (cfg.classes < 2) throw ConfigError("need at least 2 classes");
  if (cfg.channels < 1) throw ConfigError("need at least 1 channel");
  if (cfg.height < 16 || cfg.width < 16) throw ConfigError("patches must be at least 16x16");
  if (cfg.sigma < 0.0f) throw ConfigError("noise sigma must be non-negative");
  if (cfg.labels_per_patch < 1) throw ConfigError("labels per patch must be at least 1");
  if (cfg.means.empty()) {
    cfg.means = draw_means(cfg.classes, cfg.channels, cfg.min_mean_gap, cfg.seed);
  }
  if (cfg.means.size() != std::size_t{cfg.classes} * cfg.channels) {
    throw ConfigError("spectral means must be a K x C table");
  }
  for (float m : cfg.means) {
    if (!(m >= 0.0f && m <= 1.0f)) throw ConfigError("spectral means must lie in [0, 1]");
  }
  for (std::uint32_t a = 0; a < cfg.classes; ++a) {
    for (std::uint32_t b = a + 1; b < cfg.classes; ++b) {
      if (mean_distance(cfg.means, cfg.channels, a, b) <= 2.0 * cfg.sigma) {
        throw ConfigError("class spectral means must be more than 2 sigma apart");
      }
    }
  }
  return cfg;
}

/// Nearest-site class map; ties go to the lower site index.
inline ClassMap voronoi_classes(std::uint32_t height, std::uint32_t width,
                                const std::vector<Site>& sites) {
  ClassMap truth(height, width);
  for (std::uint32_t r = 0; r < height; ++r) {
    for (std::uint32_t c = 0; c < width; ++c) {
      double best = std::numeric_limits<double>::infinity();
      std::uint16_t cls = 0;
      for (const auto& s : sites) {
        const double dr = r - s.row;
        const double dc = c - s.col;
        const double d2 = dr * dr + dc * dc;
        if (d2 < best) {
          best = d2;
          cls = s.cls;
        }
      }
      truth(r, c) = cls;
    }
  }
  return truth;
}

/// Renders a landscape from explicit sites. Noise is drawn from `rng` in
/// channel-major pixel order.
inline Landscape render(const SynthConfig& cfg, const std::vector<Site>& sites, Rng& rng) {
  Landscape out;
  out.truth = voronoi_classes(cfg.height, cfg.width, sites);
  out.image = ImagePatch(cfg.channels, cfg.height, cfg.width);
  for (std::uint32_t ch = 0; ch < cfg.channels; ++ch) {
    for (std::uint32_t r = 0; r < cfg.height; ++r) {
      for (std::uint32_t c = 0; c < cfg.width; ++c) {
        const std::uint16_t k = out.truth(r, c);
        double v = cfg.means[std::size_t{k} * cfg.channels + ch];
        if (cfg.sigma > 0.0f) v += cfg.sigma * rng.normal();
        out.image.at(ch, r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

/// Generates one landscape: `blobs` uniformly placed sites with uniformly
/// drawn classes, a Voronoi class partition, and per-pixel Gaussian noise
/// around the class means, clipped to [0, 1]. Deterministic in cfg.seed.
inline Landscape gen_landscape(const SynthConfig& config) {
  const SynthConfig cfg = resolve(config);
  Rng rng(cfg.seed);
  std::vector<Site> sites(cfg.blobs);
  for (auto& s : sites) {
    s.row = rng.uniform(0.0, cfg.height);
    s.col = rng.uniform(0.0, cfg.width);
    s.cls = static_cast<std::uint16_t>(rng.below(cfg.classes));
  }
  return render(cfg, sites, rng);
}

/// Draws n distinct interior positions uniformly (partial Fisher-Yates over
/// rows/cols in [5, H-5) x [5, W-5)) and labels each with its truth class.
inline SparseLabelSet place_labels(const ClassMap& truth, std::uint32_t n,
                                   std::uint16_t classes, std::uint64_t seed) {
  if (truth.height < 2 * kBorder + 1 || truth.width < 2 * kBorder + 1) {
    throw ConfigError("class map too small to hold interior labels");
  }
  const std::uint32_t ih = truth.height - 2 * kBorder;
  const std::uint32_t iw = truth.width - 2 * kBorder;
  const std::size_t interior = std::size_t{ih} * iw;
  if (n > interior) {
    throw ConfigError("cannot place " + std::to_string(n) + " labels in " +
                      std::to_string(interior) + " interior pixels");
  }
  std::vector<std::uint32_t> cells(interior);
  std::iota(cells.begin(), cells.end(), 0u);
  Rng rng(seed);
  SparseLabelSet labels;
  labels.classes = classes;
  labels.points.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(interior - i));
    std::swap(cells[i], cells[j]);
    const std::uint32_t r = cells[i] / iw + kBorder;
    const std::uint32_t c = cells[i] % iw + kBorder;
    labels.points.push_back({static_cast<std::uint16_t>(r), static_cast<std::uint16_t>(c),
                             truth(r, c)});
  }
  return labels;
}

/// Split proportions used when synthesizing a full dataset. Samples are grouped
/// in consecutive runs of `group_size`; a whole group shares one split.
struct SplitPlan {
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint32_t group_size = 4;
};

struct SynthDataset {
  Dataset dataset;
  TruthSet truth;
};

inline Split split_for_group(std::uint32_t group, std::uint32_t groups, const SplitPlan& plan) {
  const double pos = (group + 0.5) / groups;
  if (pos < 1.0 - plan.val_fraction - plan.test_fraction) return Split::kTrain;
  if (pos < 1.0 - plan.test_fraction) return Split::kVal;
  return Split::kTest;
}

/// Synthesizes `count` samples. Sample i uses seed derive_seed(cfg.seed, i),
/// so any sample can be regenerated independently.
inline SynthDataset synth_dataset(const SynthConfig& config, std::size_t count,
                                  const SplitPlan& plan = {}) {
  SynthConfig cfg = resolve(config);
  if (plan.group_size < 1) throw ConfigError("group size must be at least 1");
  SynthDataset out;
  auto& d = out.dataset;
  d.classes = cfg.classes;
  d.channels = cfg.channels;
  d.height = cfg.height;
  d.width = cfg.width;
  out.truth.classes = cfg.classes;
  out.truth.height = cfg.height;
  out.truth.width = cfg.width;
  const auto groups =
      static_cast<std::uint32_t>((count + plan.group_size - 1) / plan.group_size);
  for (std::size_t i = 0; i < count; ++i) {
    SynthConfig local = cfg;
    local.seed = derive_seed(cfg.seed, i);
    Landscape l = gen_landscape(local);
    Sample s;
    s.group = static_cast<std::uint32_t>(i / plan.group_size);
    s.split = split_for_group(s.group, std::max(groups, 1u), plan);
    s.labels = place_labels(l.truth, cfg.labels_per_patch, cfg.classes,
                            derive_seed(local.seed, 0x1abe1));
    s.image = std::move(l.image);
    Sample meta = s;
    meta.image = {};
    d.samples.push_back(std::move(s));
    out.truth.maps.push_back(std::move(l.truth));
    out.truth.meta.push_back(std::move(meta));
  }
  return out;
}

}  // namespace lcslab::synth
