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

// Pipeline configuration and per-sample model inputs.

#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lcslab/core/types.hpp"
#include "lcslab/graph/object_graph.hpp"
#include "lcslab/models/models.hpp"
#include "lcslab/segment/segmentation.hpp"

namespace lcslab::train {

using models::Arch;
using models::ModelConfig;

enum class Aggregation { kInput, kOutput };

inline const char* aggregation_name(Aggregation a) {
  return a == Aggregation::kInput ? "input" : "output";
}

inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "input") return Aggregation::kInput;
  if (s == "output") return Aggregation::kOutput;
  throw ConfigError("unknown aggregation level '" + s + "' (expected input|output)");
}

struct PipelineConfig {
  SegmentationConfig seg;
  Aggregation agg = Aggregation::kInput;
  ModelConfig model;
  bool external_features = false;

  bool var_geom() const { return default_var_geom(seg.mmu(), !external_features); }

  void check() const {
    if (agg == Aggregation::kInput && !model.is_graph()) {
      throw ConfigError("input-level aggregation needs a graph model, not basecnn");
    }
    if (agg == Aggregation::kOutput && model.is_graph()) {
      throw ConfigError("output-level aggregation needs the basecnn model");
    }
    model.check();
  }

  /// Model input width for `channels` input channels (image or feature map).
  std::uint32_t input_dim(std::uint32_t channels) const {
    return model.is_graph() ? node_feature_dim(channels, var_geom()) : channels;
  }

  std::string to_text() const {
    std::ostringstream s;
    s << "seg.mode=" << (seg.mode == SegmentationMode::kTrivial ? "trivial" : "fh") << '\n'
      << "seg.amin=" << seg.min_size << '\n';
    s.precision(17);
    s << "seg.k=" << seg.k << '\n'
      << "pipeline.agg=" << aggregation_name(agg) << '\n'
      << "pipeline.features=" << (external_features ? 1 : 0) << '\n'
      << model.to_text();
    return s.str();
  }

  static PipelineConfig from_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) {
      auto it = kv.find(key);
      if (it == kv.end()) throw ValidationError("checkpoint config lacks key " + key);
      return it->second;
    };
    auto num = [&](const std::string& key) {
      try {
        return static_cast<std::uint32_t>(std::stoul(get(key)));
      } catch (const std::logic_error&) {
        throw ValidationError("checkpoint config key " + key + " is not a number");
      }
    };
    PipelineConfig c;
    const std::string mode = get("seg.mode");
    if (mode != "trivial" && mode != "fh") throw ValidationError("bad segmentation mode " + mode);
    c.seg.mode = mode == "fh" ? SegmentationMode::kFh : SegmentationMode::kTrivial;
    c.seg.min_size = num("seg.amin");
    c.seg.k = std::stod(get("seg.k"));
    c.agg = parse_aggregation(get("pipeline.agg"));
    c.external_features = num("pipeline.features") != 0;
    c.model.arch = models::parse_arch(get("model.arch"));
    c.model.op = models::parse_conv(get("model.op"));
    c.model.in_dim = num("model.in_dim");
    c.model.hidden = num("model.hidden");
    c.model.classes = num("model.classes");
    c.model.heads = num("model.heads");
    const std::uint32_t rs = num("model.resize");
    c.model.resize = rs != 0;
    if (rs != 0) c.model.resize_to = rs;
    return c;
  }
};

/// Everything a model needs from one sample.
struct Prepared {
  std::uint32_t height = 0, width = 0;
  SegmentMap seg;
  Graph graph;                          // graph models only
  Matrix<float> x;                      // node features (S x D) or pixels ((H*W) x C)
  std::vector<std::uint32_t> label_px;  // row-major pixel index per label
  std::vector<std::uint32_t> label_cls;
};

/// Channels-last pixel matrix of a raster.
inline Matrix<float> pixel_matrix(const Raster& r) {
  Matrix<float> m(r.pixels(), r.channels);
  for (std::uint32_t c = 0; c < r.channels; ++c) {
    for (std::size_t p = 0; p < r.pixels(); ++p) m(p, c) = r.values[c * r.pixels() + p];
  }
  return m;
}

/// Segments the raw image, then builds the model input from `features`
/// (the image itself unless an external feature map is supplied).
inline Prepared prepare(const PipelineConfig& cfg, const ImagePatch& image, const Raster& features,
                        const SparseLabelSet& labels) {
  if (features.height != image.height || features.width != image.width) {
    throw ValidationError("feature map size differs from its image");
  }
  Prepared p;
  p.height = image.height;
  p.width = image.width;
  p.seg = segment(image, cfg.seg);
  if (cfg.model.is_graph()) {
    auto nodes = node_features(features, p.seg, cfg.var_geom());
    p.graph = rag_edges(p.seg);
    p.x = std::move(nodes.values);
  } else {
    p.x = pixel_matrix(features);
  }
  for (const auto& l : labels.points) {
    p.label_px.push_back(std::uint32_t{l.row} * image.width + l.col);
    p.label_cls.push_back(l.cls);
  }
  return p;
}

}  // namespace lcslab::train
