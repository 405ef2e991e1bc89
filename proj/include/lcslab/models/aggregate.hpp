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

// Segment-wise logit averaging for pixel classifiers.

#pragma once

#include <cstdint>
#include <vector>

#include "lcslab/ad/ops.hpp"
#include "lcslab/core/types.hpp"

namespace lcslab::models {

/// Replaces every row by the mean over rows sharing its segment id.
template <typename T>
ad::Var<T> aggregate_by_segment(ad::Var<T> logits, const std::vector<std::uint32_t>& ids,
                                std::uint32_t segments) {
  return ad::gather_rows(ad::segment_mean(logits, ids, segments), ids);
}

/// Pixel logits ((H*W) x K, row-major pixels) averaged within each segment.
template <typename T>
Matrix<T> aggregate_logits_by_segment(const Matrix<T>& logits, const SegmentMap& seg) {
  if (logits.rows() != seg.ids.size()) {
    throw ValidationError("logit map has " + std::to_string(logits.rows()) + " pixels, segment map " +
                          std::to_string(seg.ids.size()));
  }
  const std::size_t K = logits.cols();
  Matrix<double> sum(seg.count, K);
  std::vector<std::uint32_t> count(seg.count, 0);
  for (std::size_t p = 0; p < logits.rows(); ++p) {
    const std::uint32_t s = seg.ids.data[p];
    if (s >= seg.count) throw ValidationError("segment id out of range");
    ++count[s];
    for (std::size_t k = 0; k < K; ++k) sum(s, k) += logits(p, k);
  }
  Matrix<T> out(logits.rows(), K);
  for (std::size_t p = 0; p < logits.rows(); ++p) {
    const std::uint32_t s = seg.ids.data[p];
    for (std::size_t k = 0; k < K; ++k) out(p, k) = static_cast<T>(sum(s, k) / count[s]);
  }
  return out;
}

/// Row-wise argmax, ties to the lowest class.
template <typename T>
std::vector<std::uint16_t> argmax_rows(const Matrix<T>& m) {
  std::vector<std::uint16_t> out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.cols(); ++k) {
      if (m(i, k) > m(i, best)) best = k;
    }
    out[i] = static_cast<std::uint16_t>(best);
  }
  return out;
}

}  // namespace lcslab::models
