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


#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "lcslab/synth/landscape.hpp"

namespace lcslab::synth {
namespace {

TEST(Landscape, NoiselessSingleBlobIsConstant) {
  SynthConfig cfg;
  cfg.classes = 3;
  cfg.channels = 2;
  cfg.height = cfg.width = 16;
  cfg.blobs = 1;
  cfg.sigma = 0.0f;
  cfg.seed = 7;
  const auto l = gen_landscape(cfg);
  const auto resolved = resolve(cfg);
  const std::uint16_t k = l.truth(0, 0);
  for (auto v : l.truth.data) EXPECT_EQ(v, k);
  for (std::uint32_t c = 0; c < 2; ++c) {
    for (std::uint32_t r = 0; r < 16; ++r) {
      for (std::uint32_t col = 0; col < 16; ++col) {
        EXPECT_EQ(l.image.at(c, r, col), resolved.means[k * 2 + c]);
      }
    }
  }
}

TEST(Landscape, SameSeedSameOutput) {
  SynthConfig cfg;
  cfg.seed = 99;
  const auto a = gen_landscape(cfg);
  const auto b = gen_landscape(cfg);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.truth, b.truth);
  cfg.seed = 100;
  EXPECT_NE(gen_landscape(cfg).image, a.image);
}

TEST(Landscape, OppositeCornersSplitAlongTheBisector) {
  const std::vector<Site> sites{{0.0, 0.0, 0}, {15.0, 15.0, 1}};
  const auto m = voronoi_classes(16, 16, sites);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      // Squared distances to both corners; ties go to the first site.
      const int d0 = r * r + c * c;
      const int d1 = (15 - r) * (15 - r) + (15 - c) * (15 - c);
      EXPECT_EQ(m(r, c), d0 <= d1 ? 0 : 1) << r << "," << c;
    }
  }
}

TEST(Landscape, ValuesStayInUnitRange) {
  SynthConfig cfg;
  cfg.sigma = 0.2f;
  cfg.min_mean_gap = 0.45f;
  cfg.classes = 3;
  const auto l = gen_landscape(cfg);
  EXPECT_NO_THROW(validate_patch(l.image));
}

TEST(Landscape, MeansAreSeparated) {
  SynthConfig cfg;
  cfg.classes = 6;
  cfg.channels = 4;
  const auto r = resolve(cfg);
  for (std::uint32_t a = 0; a < 6; ++a) {
    for (std::uint32_t b = a + 1; b < 6; ++b) {
      double d2 = 0;
      for (int c = 0; c < 4; ++c) {
        const double d = r.means[a * 4 + c] - r.means[b * 4 + c];
        d2 += d * d;
      }
      EXPECT_GE(std::sqrt(d2), cfg.min_mean_gap);
    }
  }
}

TEST(Landscape, RejectsBadConfigs) {
  SynthConfig cfg;
  cfg.blobs = 0;
  EXPECT_THROW(resolve(cfg), ConfigError);
  cfg = {};
  cfg.height = 8;
  EXPECT_THROW(resolve(cfg), ConfigError);
  cfg = {};
  cfg.classes = 2;
  cfg.channels = 1;
  cfg.means = {0.4f, 0.5f};
  cfg.sigma = 0.1f;  // gap 0.1 is not above 2 sigma
  EXPECT_THROW(resolve(cfg), ConfigError);
}

TEST(Labels, OneLabelInsideTheInterior) {
  SynthConfig cfg;
  const auto l = gen_landscape(cfg);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = place_labels(l.truth, 1, 5, seed);
    ASSERT_EQ(s.points.size(), 1u);
    const auto& p = s.points[0];
    EXPECT_GE(p.row, 5);
    EXPECT_LT(p.row, 59);
    EXPECT_GE(p.col, 5);
    EXPECT_LT(p.col, 59);
    EXPECT_EQ(p.cls, l.truth(p.row, p.col));
  }
}

TEST(Labels, ExhaustionLabelsEveryInteriorPixelOnce) {
  SynthConfig cfg;
  cfg.height = cfg.width = 16;
  const auto l = gen_landscape(cfg);
  const auto s = place_labels(l.truth, 36, 5, 3);
  std::set<std::pair<int, int>> seen;
  for (const auto& p : s.points) {
    EXPECT_TRUE(seen.insert({p.row, p.col}).second);
    EXPECT_EQ(p.cls, l.truth(p.row, p.col));
  }
  EXPECT_EQ(seen.size(), 36u);
  EXPECT_THROW(place_labels(l.truth, 37, 5, 3), ConfigError);
}

TEST(Labels, Deterministic) {
  SynthConfig cfg;
  const auto l = gen_landscape(cfg);
  EXPECT_EQ(place_labels(l.truth, 20, 5, 8), place_labels(l.truth, 20, 5, 8));
}

TEST(SynthDataset, SplitsFollowGroupsAndLabelsMatchTruth) {
  SynthConfig cfg;
  cfg.height = cfg.width = 24;
  cfg.labels_per_patch = 4;
  SplitPlan plan;
  plan.group_size = 3;
  const auto out = synth_dataset(cfg, 30, plan);
  const auto& d = out.dataset;
  ASSERT_EQ(d.samples.size(), 30u);
  ASSERT_EQ(out.truth.maps.size(), 30u);
  std::map<std::uint32_t, Split> group_split;
  std::set<Split> used;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& s = d.samples[i];
    EXPECT_EQ(s.group, i / 3);
    auto [it, fresh] = group_split.emplace(s.group, s.split);
    EXPECT_EQ(it->second, s.split);
    used.insert(s.split);
    for (const auto& p : s.labels.points) EXPECT_EQ(p.cls, out.truth.maps[i](p.row, p.col));
    EXPECT_EQ(out.truth.meta[i].labels, s.labels);
  }
  EXPECT_EQ(used.size(), 3u);
  EXPECT_EQ(synth_dataset(cfg, 30, plan).dataset, d);
}

TEST(SynthDataset, SamplesRegenerateIndependently) {
  SynthConfig cfg;
  cfg.height = cfg.width = 20;
  const auto all = synth_dataset(cfg, 5);
  SynthConfig one = resolve(cfg);
  one.seed = derive_seed(cfg.seed, 3);
  EXPECT_EQ(gen_landscape(one).image, all.dataset.samples[3].image);
}

}  // namespace
}  // namespace lcslab::synth
