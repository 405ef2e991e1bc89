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

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lcslab/core/types.hpp"
#include "lcslab/rng.hpp"

namespace lcslab {

/// Training-set fraction 1/denominator with denominator in {1, 2, 4, 8, 16}.
struct Fraction {
  std::uint32_t denominator = 1;

  static Fraction parse(const std::string& text) {
    std::uint32_t d = 0;
    if (text == "1" || text == "full") d = 1;
    else if (text.rfind("1/", 0) == 0) {
      try {
        d = static_cast<std::uint32_t>(std::stoul(text.substr(2)));
      } catch (const std::exception&) {
        d = 0;
      }
    }
    Fraction f{d};
    f.check();
    return f;
  }

  void check() const {
    if (denominator != 1 && denominator != 2 && denominator != 4 &&
        denominator != 8 && denominator != 16) {
      throw ConfigError("dataset fraction must be one of 1, 1/2, 1/4, 1/8, 1/16");
    }
  }

  std::string str() const {
    return denominator == 1 ? "1" : "1/" + std::to_string(denominator);
  }

  friend bool operator==(const Fraction&, const Fraction&) = default;
};

/// Nested random subset of a training set.
///
/// One seeded permutation of `count` items is drawn and the first
/// ceil(count / denominator) entries are returned, so for a fixed seed the 1/16
/// subset is contained in the 1/8 subset, and so on up to the full set.
inline std::vector<std::size_t> hierarchical_subset(std::size_t count, Fraction f,
                                                    std::uint64_t seed) {
  f.check();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5b5e7));
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t keep = (count + f.denominator - 1) / f.denominator;
  order.resize(keep);
  return order;
}

/// Applies hierarchical_subset to a list of training samples; every sample must
/// belong to the training split.
inline std::vector<std::size_t> hierarchical_subset(const std::vector<Sample>& train,
                                                    Fraction f, std::uint64_t seed) {
  for (const auto& s : train) {
    if (s.split != Split::kTrain) {
      throw ValidationError("hierarchical subsets are drawn from the training split only");
    }
  }
  return hierarchical_subset(train.size(), f, seed);
}

}  // namespace lcslab
