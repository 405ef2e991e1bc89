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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "lcslab/core/dataset.hpp"
#include "lcslab/core/normalize.hpp"
#include "lcslab/core/subset.hpp"
#include "lcslab/matrix.hpp"
#include "lcslab/rng.hpp"
#include "support/generators.hpp"

namespace lcslab {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("lcslab_core_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Dataset one_sample(std::uint16_t label_row) {
  Dataset d;
  d.classes = 3;
  d.channels = 1;
  d.height = 16;
  d.width = 16;
  Sample s;
  s.image = Raster(1, 16, 16, 0.25f);
  s.labels.classes = 3;
  s.labels.points.push_back({label_row, 7, 2});
  s.group = 9;
  d.samples.push_back(s);
  return d;
}

TEST(Normalize, DividesAndClips) {
  const std::vector<std::int32_t> raw{3000, 0, 1500, 9000};
  const auto p = normalize_s2(raw, 4, 1, 1);
  EXPECT_FLOAT_EQ(p.values[0], 1.0f);
  EXPECT_FLOAT_EQ(p.values[1], 0.0f);
  EXPECT_FLOAT_EQ(p.values[2], 0.5f);
  EXPECT_FLOAT_EQ(p.values[3], 1.0f);  // NIR 9000 / 7000 clipped
}

TEST(Normalize, RejectsBadDivisors) {
  const std::vector<std::int32_t> raw{1, 2};
  const std::vector<float> zero{0.0f, 1.0f};
  EXPECT_THROW(normalize_s2(raw, 2, 1, 1, zero), ConfigError);
  const std::vector<float> one{1.0f};
  EXPECT_THROW(normalize_s2(raw, 2, 1, 1, one), ConfigError);
}

TEST(Dataset, SingleSampleByteCount) {
  // magic 4 + version 4 + count 8 + K,C,H,W 2 each; image 16*16*4;
  // split 1 + group 4 + label count 2; one label of 3 u16.
  const std::size_t expected = (4 + 4 + 8 + 4 * 2) + 16 * 16 * 4 + (1 + 4 + 2) + 6;
  EXPECT_EQ(expected, 1061u);
  EXPECT_EQ(encode_dataset(one_sample(5)).size(), expected);
}

TEST(Dataset, EmptyDatasetIsHeaderOnly) {
  Dataset d;
  d.classes = 2;
  d.channels = 3;
  d.height = 16;
  d.width = 16;
  const auto bytes = encode_dataset(d);
  EXPECT_EQ(bytes.size(), 24u);
  const auto back = decode_dataset(bytes, "mem");
  EXPECT_TRUE(back.samples.empty());
  EXPECT_EQ(back, d);
}

TEST(Dataset, LabelInsideBorderIsRejected) {
  EXPECT_THROW(encode_dataset(one_sample(2)), ValidationError);
  EXPECT_NO_THROW(encode_dataset(one_sample(5)));
  EXPECT_THROW(encode_dataset(one_sample(11)), ValidationError);  // row 11 of 16 is in the border
}

TEST(Dataset, BadMagicAndVersion) {
  auto bytes = encode_dataset(one_sample(5));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_dataset(bad_magic, "mem"), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_THROW(decode_dataset(bad_version, "mem"), FormatError);
}

TEST(Dataset, TruncationIsAnIoError) {
  const auto bytes = encode_dataset(one_sample(5));
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, std::size_t{100}, bytes.size() - 1}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + cut);
    EXPECT_THROW(decode_dataset(part, "mem"), IoError) << "cut at " << cut;
  }
}

TEST(Dataset, TrailingBytesAreAFormatError) {
  auto bytes = encode_dataset(one_sample(5));
  bytes.push_back(0);
  EXPECT_THROW(decode_dataset(bytes, "mem"), FormatError);
}

TEST(Dataset, FuzzedRoundTripIsBitIdentical) {
  Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    const Dataset d = testing::random_dataset(rng);
    const auto bytes = encode_dataset(d);
    const Dataset back = decode_dataset(bytes, "mem");
    EXPECT_EQ(back, d);
    EXPECT_EQ(encode_dataset(back), bytes);
  }
}

TEST(Dataset, FileRoundTrip) {
  const auto dir = temp_dir("file");
  Rng rng(3);
  const Dataset d = testing::random_dataset(rng);
  write_dataset(d, dir / "d.lcsb");
  EXPECT_EQ(read_dataset(dir / "d.lcsb"), d);
  EXPECT_THROW(read_dataset(dir / "missing.lcsb"), IoError);
}

TEST(Dataset, TruthRoundTrip) {
  TruthSet t;
  t.classes = 4;
  t.height = 16;
  t.width = 17;
  Rng rng(5);
  for (int i = 0; i < 3; ++i) {
    t.maps.push_back(testing::random_class_map(rng, 16, 17, 4));
    Sample meta;
    meta.split = static_cast<Split>(i);
    meta.group = static_cast<std::uint32_t>(i * 7);
    meta.labels = testing::random_labels(rng, 16, 17, 4, 3);
    t.meta.push_back(meta);
  }
  EXPECT_EQ(decode_truth(encode_truth(t), "mem"), t);
}

TEST(Dataset, ManifestOverridesSplitAndGroup) {
  const auto dir = temp_dir("manifest");
  Dataset d = one_sample(5);
  d.samples.push_back(d.samples[0]);
  {
    std::ofstream m(dir / "m.txt");
    m << "# index split group\n1 test 4\n\n0 val 2  # trailing comment\n";
  }
  apply_manifest(d, dir / "m.txt");
  EXPECT_EQ(d.samples[0].split, Split::kVal);
  EXPECT_EQ(d.samples[0].group, 2u);
  EXPECT_EQ(d.samples[1].split, Split::kTest);
  EXPECT_EQ(d.samples[1].group, 4u);
  {
    std::ofstream m(dir / "bad.txt");
    m << "0 holdout 1\n";
  }
  EXPECT_THROW(apply_manifest(d, dir / "bad.txt"), FormatError);
  {
    std::ofstream m(dir / "range.txt");
    m << "5 train 1\n";
  }
  EXPECT_THROW(apply_manifest(d, dir / "range.txt"), ValidationError);
}

TEST(Subset, FullFractionIsAPermutationOfEverything) {
  const auto s = hierarchical_subset(37, Fraction{1}, 4);
  std::set<std::size_t> seen(s.begin(), s.end());
  EXPECT_EQ(s.size(), 37u);
  EXPECT_EQ(seen.size(), 37u);
  EXPECT_EQ(*seen.rbegin(), 36u);
}

TEST(Subset, SixteenthOfSixteenIsOneSample) {
  std::size_t expected = 0;
  for (std::size_t taken = 0; taken * 16 < 16; ++taken) ++expected;  // ceil by counting
  EXPECT_EQ(hierarchical_subset(16, Fraction{16}, 0).size(), expected);
}

TEST(Subset, NestingHoldsForAllSeedsAndPairs) {
  const std::uint32_t dens[] = {1, 2, 4, 8, 16};
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    for (std::size_t n : {1u, 5u, 16u, 33u, 100u}) {
      for (std::uint32_t a : dens) {
        for (std::uint32_t b : dens) {
          if (b <= a) continue;  // 1/b < 1/a
          const auto big = hierarchical_subset(n, Fraction{a}, seed);
          const auto small = hierarchical_subset(n, Fraction{b}, seed);
          ASSERT_LE(small.size(), big.size());
          EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
          EXPECT_EQ(small.size(), (n + b - 1) / b);
        }
      }
    }
  }
}

TEST(Subset, RejectsUnknownFractions) {
  EXPECT_THROW(Fraction::parse("1/3"), ConfigError);
  EXPECT_THROW(Fraction::parse("0.5"), ConfigError);
  EXPECT_THROW(Fraction::parse("1/"), ConfigError);
  EXPECT_EQ(Fraction::parse("1/8").denominator, 8u);
  EXPECT_EQ(Fraction::parse("1").denominator, 1u);
  EXPECT_THROW(hierarchical_subset(4, Fraction{3}, 0), ConfigError);
}

TEST(Subset, RejectsNonTrainingSamples) {
  std::vector<Sample> s(3);
  s[1].split = Split::kVal;
  EXPECT_THROW(hierarchical_subset(s, Fraction{1}, 0), ValidationError);
}

TEST(Rng, DeterministicStreams) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(0, 1), derive_seed(1, 0));
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(c.below(7), 7u);
  }
}

TEST(Matrix, ShapeChecks) {
  EXPECT_THROW(Matrix<float>(2, 2, std::vector<float>{1, 2, 3}), ValidationError);
  Matrix<double> m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);
  EXPECT_EQ(m.cast<float>().cast<double>(), m);
}

TEST(Types, PatchValidation) {
  Raster small(1, 15, 16);
  EXPECT_THROW(validate_patch(small), ValidationError);
  Raster ok(2, 16, 16, 0.5f);
  EXPECT_NO_THROW(validate_patch(ok));
  ok.values[3] = 1.5f;
  EXPECT_THROW(validate_patch(ok), ValidationError);
}

TEST(Types, LabelValidation) {
  SparseLabelSet s;
  s.classes = 3;
  s.points = {{5, 5, 1}, {5, 5, 2}};
  EXPECT_THROW(validate_labels(s, 16, 16), ValidationError);  // duplicate
  s.points = {{5, 5, 3}};
  EXPECT_THROW(validate_labels(s, 16, 16), ValidationError);  // class range
  s.points = {{10, 10, 0}};
  EXPECT_NO_THROW(validate_labels(s, 16, 16));
}

}  // namespace
}  // namespace lcslab
