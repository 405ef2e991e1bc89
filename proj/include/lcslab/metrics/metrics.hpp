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

// Accuracy with pixel tolerance and landscape fragmentation metrics.
//
// Every metric looks only at the interior left after removing `border` pixels
// on each side: tolerance windows are clipped to it, and regions and
// boundaries are computed on the interior sub-map alone.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "lcslab/core/types.hpp"
#include "lcslab/segment/disjoint_set.hpp"

namespace lcslab::metrics {

struct MetricsConfig {
  std::uint32_t border = kBorder;
};

struct Interior {
  std::uint32_t r0 = 0, r1 = 0, c0 = 0, c1 = 0;  // half-open

  bool contains(std::int64_t r, std::int64_t c) const {
    return r >= r0 && r < r1 && c >= c0 && c < c1;
  }
  std::size_t pixels() const { return std::size_t{r1 - r0} * (c1 - c0); }
};

inline Interior interior(const ClassMap& m, std::uint32_t border) {
  if (2 * border >= m.height || 2 * border >= m.width) {
    throw ValidationError("class map " + std::to_string(m.height) + "x" + std::to_string(m.width) +
                          " has no interior for border " + std::to_string(border));
  }
  return {border, m.height - border, border, m.width - border};
}

inline void check_tolerance(int t) {
  if (t != 0 && t != 1) throw ConfigError("tolerance must be 0 or 1");
}

/// The class credited to a labelled pixel: the true class when it occurs in
/// the tolerance window (the pixel itself for t = 0, its clipped closed
/// 8-neighbourhood for t = 1), otherwise the prediction at the pixel.
inline std::uint16_t effective_prediction(const ClassMap& pred, const PointLabel& p, int t,
                                          const Interior& in) {
  if (!in.contains(p.row, p.col)) {
    throw ValidationError("label at (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                          ") lies outside the evaluated interior");
  }
  for (int dr = -t; dr <= t; ++dr) {
    for (int dc = -t; dc <= t; ++dc) {
      const std::int64_t r = std::int64_t{p.row} + dr, c = std::int64_t{p.col} + dc;
      if (in.contains(r, c) && pred(static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)) == p.cls) {
        return p.cls;
      }
    }
  }
  return pred(p.row, p.col);
}

/// Label-level confusion counts, pooled over any number of maps.
struct Confusion {
  std::uint32_t classes = 0;
  std::vector<std::uint64_t> counts;  // [truth * classes + predicted]

  explicit Confusion(std::uint32_t k = 0) : classes(k), counts(std::size_t{k} * k, 0) {}

  void add(const ClassMap& pred, const SparseLabelSet& labels, int t, std::uint32_t border) {
    check_tolerance(t);
    const Interior in = interior(pred, border);
    for (const auto& p : labels.points) {
      const std::uint16_t e = effective_prediction(pred, p, t, in);
      if (p.cls >= classes || e >= classes) {
        throw ValidationError("class id exceeds the confusion matrix size");
      }
      ++counts[std::size_t{p.cls} * classes + e];
    }
  }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }

  std::uint64_t correct() const {
    std::uint64_t n = 0;
    for (std::uint32_t k = 0; k < classes; ++k) n += counts[std::size_t{k} * classes + k];
    return n;
  }

  double accuracy() const {
    if (total() == 0) throw ValidationError("accuracy of an empty label set");
    return static_cast<double>(correct()) / static_cast<double>(total());
  }

  /// Macro F1 over classes present among the labels; a class with P + R = 0
  /// scores 0.
  double macro_f1() const {
    if (total() == 0) throw ValidationError("F1 of an empty label set");
    double sum = 0.0;
    std::uint32_t present = 0;
    for (std::uint32_t k = 0; k < classes; ++k) {
      std::uint64_t tp = counts[std::size_t{k} * classes + k], row = 0, col = 0;
      for (std::uint32_t j = 0; j < classes; ++j) {
        row += counts[std::size_t{k} * classes + j];
        col += counts[std::size_t{j} * classes + k];
      }
      if (row == 0) continue;
      ++present;
      const double prec = col == 0 ? 0.0 : static_cast<double>(tp) / col;
      const double rec = static_cast<double>(tp) / row;
      sum += (prec + rec) == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
    }
    return sum / present;
  }
};

inline std::uint32_t class_bound(const ClassMap& pred, const SparseLabelSet& labels) {
  std::uint32_t k = labels.classes;
  for (auto v : pred.data) k = std::max<std::uint32_t>(k, v + 1u);
  for (const auto& p : labels.points) k = std::max<std::uint32_t>(k, p.cls + 1u);
  return k;
}

inline double overall_accuracy(const ClassMap& pred, const SparseLabelSet& labels, int t,
                               std::uint32_t border = kBorder) {
  Confusion c(class_bound(pred, labels));
  c.add(pred, labels, t, border);
  return c.accuracy();
}

inline double f1_macro(const ClassMap& pred, const SparseLabelSet& labels, int t,
                       std::uint32_t border = kBorder) {
  Confusion c(class_bound(pred, labels));
  c.add(pred, labels, t, border);
  return c.macro_f1();
}

/// Sizes of maximal 4-connected constant-class regions inside the interior.
inline std::vector<std::uint32_t> region_sizes(const ClassMap& pred, std::uint32_t border = 0) {
  const Interior in = interior(pred, border);
  const std::uint32_t h = in.r1 - in.r0, w = in.c1 - in.c0;
  DisjointSet sets(std::size_t{h} * w);
  auto at = [&](std::uint32_t r, std::uint32_t c) { return pred(in.r0 + r, in.c0 + c); };
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      const std::uint32_t p = r * w + c;
      if (c + 1 < w && at(r, c) == at(r, c + 1)) sets.unite(p, p + 1);
      if (r + 1 < h && at(r, c) == at(r + 1, c)) sets.unite(p, p + w);
    }
  }
  std::map<std::uint32_t, std::uint32_t> size;
  for (std::uint32_t p = 0; p < h * w; ++p) ++size[sets.find(p)];
  std::vector<std::uint32_t> out;
  out.reserve(size.size());
  for (auto [root, n] : size) out.push_back(n);
  return out;
}

inline std::uint32_t patch_density(const ClassMap& pred, std::uint32_t border = kBorder) {
  return static_cast<std::uint32_t>(region_sizes(pred, border).size());
}

/// Interior pixels with at least one interior 4-neighbour of another class.
inline std::uint32_t edge_count(const ClassMap& pred, std::uint32_t border = kBorder) {
  const Interior in = interior(pred, border);
  std::uint32_t n = 0;
  constexpr int kDr[4] = {-1, 1, 0, 0}, kDc[4] = {0, 0, -1, 1};
  for (std::uint32_t r = in.r0; r < in.r1; ++r) {
    for (std::uint32_t c = in.c0; c < in.c1; ++c) {
      for (int d = 0; d < 4; ++d) {
        const std::int64_t rr = std::int64_t{r} + kDr[d], cc = std::int64_t{c} + kDc[d];
        if (in.contains(rr, cc) &&
            pred(static_cast<std::uint32_t>(rr), static_cast<std::uint32_t>(cc)) != pred(r, c)) {
          ++n;
          break;
        }
      }
    }
  }
  return n;
}

inline double edge_proportion(const ClassMap& pred, std::uint32_t border = kBorder) {
  return static_cast<double>(edge_count(pred, border)) /
         static_cast<double>(interior(pred, border).pixels());
}

/// Shannon entropy (nats) of the interior class frequencies.
inline double entropy(const ClassMap& pred, std::uint32_t border = kBorder) {
  const Interior in = interior(pred, border);
  std::map<std::uint16_t, std::uint64_t> freq;
  for (std::uint32_t r = in.r0; r < in.r1; ++r) {
    for (std::uint32_t c = in.c0; c < in.c1; ++c) ++freq[pred(r, c)];
  }
  const double total = static_cast<double>(in.pixels());
  double h = 0.0;
  for (auto [k, n] : freq) {
    const double p = static_cast<double>(n) / total;
    h -= p * std::log(p);
  }
  return h;
}

struct MetricsReport {
  double oa_t0 = 0, oa_t1 = 0, f1_t0 = 0, f1_t1 = 0;
  double patch_density = 0;
  double edge_density = 0;     // boundary pixels per patch
  double edge_proportion = 0;  // boundary pixels / interior pixels
  double entropy = 0;
  std::size_t samples = 0;
  std::uint64_t labels = 0;
};

/// Accuracy and F1 pooled over all labels; fragmentation averaged per patch.
inline MetricsReport evaluate_report(const std::vector<ClassMap>& preds,
                                     const std::vector<SparseLabelSet>& labels,
                                     std::uint32_t classes, const MetricsConfig& cfg = {}) {
  if (preds.size() != labels.size()) {
    throw ValidationError("prediction count " + std::to_string(preds.size()) +
                          " does not match label set count " + std::to_string(labels.size()));
  }
  if (preds.empty()) throw ValidationError("cannot evaluate an empty set");
  std::uint32_t k = classes;
  for (std::size_t i = 0; i < preds.size(); ++i) k = std::max(k, class_bound(preds[i], labels[i]));
  Confusion c0(k), c1(k);
  MetricsReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    c0.add(preds[i], labels[i], 0, cfg.border);
    c1.add(preds[i], labels[i], 1, cfg.border);
    r.patch_density += patch_density(preds[i], cfg.border);
    r.edge_density += edge_count(preds[i], cfg.border);
    r.edge_proportion += edge_proportion(preds[i], cfg.border);
    r.entropy += entropy(preds[i], cfg.border);
  }
  const double n = static_cast<double>(preds.size());
  r.patch_density /= n;
  r.edge_density /= n;
  r.edge_proportion /= n;
  r.entropy /= n;
  r.oa_t0 = c0.accuracy();
  r.oa_t1 = c1.accuracy();
  r.f1_t0 = c0.macro_f1();
  r.f1_t1 = c1.macro_f1();
  r.samples = preds.size();
  r.labels = c0.total();
  return r;
}

}  // namespace lcslab::metrics
