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


// Brute-force reference implementations used as test oracles. They favour
// directness over speed and share no code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "lcslab/core/types.hpp"

namespace lcslab::testing {

struct Box {
  int r0, r1, c0, c1;  // half-open
  bool has(int r, int c) const { return r >= r0 && r < r1 && c >= c0 && c < c1; }
};

inline Box box_of(const ClassMap& m, int border) {
  return {border, int(m.height) - border, border, int(m.width) - border};
}

/// Connected constant-class regions by breadth-first flood fill.
inline std::vector<int> flood_regions(const ClassMap& m, int border) {
  const Box b = box_of(m, border);
  std::vector<std::vector<char>> seen(m.height, std::vector<char>(m.width, 0));
  std::vector<int> sizes;
  for (int r = b.r0; r < b.r1; ++r) {
    for (int c = b.c0; c < b.c1; ++c) {
      if (seen[r][c]) continue;
      int n = 0;
      std::queue<std::pair<int, int>> q;
      q.push({r, c});
      seen[r][c] = 1;
      while (!q.empty()) {
        auto [y, x] = q.front();
        q.pop();
        ++n;
        const int ny[4] = {y - 1, y + 1, y, y}, nx[4] = {x, x, x - 1, x + 1};
        for (int d = 0; d < 4; ++d) {
          if (b.has(ny[d], nx[d]) && !seen[ny[d]][nx[d]] && m(ny[d], nx[d]) == m(y, x)) {
            seen[ny[d]][nx[d]] = 1;
            q.push({ny[d], nx[d]});
          }
        }
      }
      sizes.push_back(n);
    }
  }
  return sizes;
}

/// Boundary pixels found by marking both sides of every unequal adjacent pair.
inline int boundary_pixels(const ClassMap& m, int border) {
  const Box b = box_of(m, border);
  std::set<std::pair<int, int>> marked;
  for (int r = b.r0; r < b.r1; ++r) {
    for (int c = b.c0; c < b.c1; ++c) {
      if (c + 1 < b.c1 && m(r, c) != m(r, c + 1)) {
        marked.insert({r, c});
        marked.insert({r, c + 1});
      }
      if (r + 1 < b.r1 && m(r, c) != m(r + 1, c)) {
        marked.insert({r, c});
        marked.insert({r + 1, c});
      }
    }
  }
  return static_cast<int>(marked.size());
}

/// Entropy from a sorted copy of the interior values.
inline double entropy_oracle(const ClassMap& m, int border) {
  const Box b = box_of(m, border);
  std::vector<int> v;
  for (int r = b.r0; r < b.r1; ++r) {
    for (int c = b.c0; c < b.c1; ++c) v.push_back(m(r, c));
  }
  std::sort(v.begin(), v.end());
  double h = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double p = double(j - i) / double(v.size());
    h -= p * std::log(p);
    i = j;
  }
  return h;
}

/// Credited class of a label: scans every interior pixel and accepts any of
/// the true class within Chebyshev distance t.
inline int credited(const ClassMap& m, const PointLabel& l, int t, int border) {
  const Box b = box_of(m, border);
  for (int r = b.r0; r < b.r1; ++r) {
    for (int c = b.c0; c < b.c1; ++c) {
      if (std::abs(r - l.row) <= t && std::abs(c - l.col) <= t && m(r, c) == l.cls) return l.cls;
    }
  }
  return m(l.row, l.col);
}

struct ScoreOracle {
  long correct = 0, total = 0;
  double f1 = 0.0;
};

inline ScoreOracle score_oracle(const std::vector<ClassMap>& maps,
                                const std::vector<SparseLabelSet>& labels, int t, int border) {
  std::vector<std::pair<int, int>> pairs;  // (truth, credited)
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (const auto& l : labels[i].points) pairs.push_back({l.cls, credited(maps[i], l, t, border)});
  }
  ScoreOracle s;
  std::set<int> present;
  for (auto [y, p] : pairs) {
    present.insert(y);
    ++s.total;
    if (y == p) ++s.correct;
  }
  for (int k : present) {
    long tp = 0, fp = 0, fn = 0;
    for (auto [y, p] : pairs) {
      tp += (y == k && p == k);
      fp += (y != k && p == k);
      fn += (y == k && p != k);
    }
    // 2PR / (P + R) simplifies to 2TP / (2TP + FP + FN).
    s.f1 += tp == 0 ? 0.0 : 2.0 * tp / double(2 * tp + fp + fn);
  }
  s.f1 /= double(present.size());
  return s;
}

}  // namespace lcslab::testing
