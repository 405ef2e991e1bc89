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

// Classifier architectures: node-wise MLP, graph convolution stack, graph
// U-Net with Graclus pooling, and a small fully convolutional pixel model.

#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "lcslab/ad/nn.hpp"
#include "lcslab/ad/param_store.hpp"
#include "lcslab/models/graclus.hpp"
#include "lcslab/models/graph_conv.hpp"

namespace lcslab::models {

enum class Arch { kBaseMlp, kBaseGnn, kGraphUnet, kBaseCnn };

inline const char* arch_name(Arch a) {
  switch (a) {
    case Arch::kBaseMlp: return "basemlp";
    case Arch::kBaseGnn: return "basegnn";
    case Arch::kGraphUnet: return "gunet";
    case Arch::kBaseCnn: return "basecnn";
  }
  return "?";
}

inline Arch parse_arch(const std::string& s) {
  if (s == "basemlp") return Arch::kBaseMlp;
  if (s == "basegnn") return Arch::kBaseGnn;
  if (s == "gunet") return Arch::kGraphUnet;
  if (s == "basecnn") return Arch::kBaseCnn;
  throw ConfigError("unknown architecture '" + s + "' (expected basemlp|basegnn|gunet|basecnn)");
}

inline constexpr std::uint32_t kDepth = 3;

struct ModelConfig {
  Arch arch = Arch::kBaseGnn;
  ConvKind op = ConvKind::kGcn;
  std::uint32_t in_dim = 0;
  std::uint32_t hidden = 64;
  std::uint32_t classes = 0;
  std::uint32_t heads = 4;
  bool resize = false;  // basecnn: upscale input, downscale before the last layer
  std::uint32_t resize_to = 224;

  bool is_graph() const { return arch != Arch::kBaseCnn; }

  std::uint32_t conv_heads() const {
    return (op == ConvKind::kGat || op == ConvKind::kGt) ? heads : 1;
  }

  void check() const {
    if (in_dim == 0) throw ValidationError("model input width must be positive");
    if (classes < 2) throw ValidationError("model needs at least 2 classes");
    if (hidden < classes) throw ValidationError("hidden width must be at least the class count");
    if (heads < 1) throw ValidationError("attention heads must be at least 1");
    if (is_graph() && arch != Arch::kBaseMlp && hidden % conv_heads() != 0) {
      throw ValidationError("hidden width must be divisible by the head count");
    }
    if (resize && resize_to < 1) throw ValidationError("resize target must be positive");
  }

  std::string to_text() const {
    std::ostringstream s;
    s << "model.arch=" << arch_name(arch) << '\n'
      << "model.op=" << conv_name(op) << '\n'
      << "model.in_dim=" << in_dim << '\n'
      << "model.hidden=" << hidden << '\n'
      << "model.classes=" << classes << '\n'
      << "model.heads=" << heads << '\n'
      << "model.resize=" << (resize ? resize_to : 0) << '\n';
    return s.str();
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

namespace detail {

template <typename T>
void init_bn(ParamStore<T>& store, const std::string& prefix, std::uint32_t width) {
  store.add(prefix + ".gamma", Matrix<T>(1, width, T{1}));
  store.add(prefix + ".beta", Matrix<T>(1, width));
  store.add(prefix + ".mean", Matrix<T>(1, width), false);
  store.add(prefix + ".var", Matrix<T>(1, width, T{1}), false);
}

/// Batch norm that falls back to running statistics when a training batch
/// has a single row (deep pooling levels of tiny graphs).
template <typename T>
Var<T> bn(ParamBinder<T>& p, const std::string& prefix, Var<T> x, bool training) {
  return ad::batch_norm(x, p(prefix + ".gamma"), p(prefix + ".beta"), p.buffer(prefix + ".mean"),
                        p.buffer(prefix + ".var"), training && x.rows() >= 2);
}

inline ConvSpec conv_spec(const ModelConfig& cfg, std::uint32_t in) {
  return {cfg.op, in, cfg.hidden, cfg.conv_heads(), true};
}

template <typename T>
void init_cnn_conv(ParamStore<T>& store, const std::string& prefix, std::uint32_t in,
                   std::uint32_t out, std::uint32_t k, Rng& rng) {
  const double kk = static_cast<double>(k) * k;
  store.add(prefix + ".W", glorot<T>(rng, out, std::size_t{in} * k * k, in * kk, out * kk));
  store.add(prefix + ".b", Matrix<T>(1, out));
}

}  // namespace detail

/// Fresh parameters: Glorot-uniform weights, zero biases, identity batch norm.
template <typename T>
ParamStore<T> init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.check();
  Rng rng(derive_seed(seed, 0x1417));
  ParamStore<T> s;
  const std::uint32_t h = cfg.hidden;
  switch (cfg.arch) {
    case Arch::kBaseMlp:
      for (std::uint32_t l = 0; l < kDepth; ++l) {
        init_linear(s, "l" + std::to_string(l), l == 0 ? cfg.in_dim : h, h, rng);
        detail::init_bn(s, "bn" + std::to_string(l), h);
      }
      break;
    case Arch::kBaseGnn:
      for (std::uint32_t l = 0; l < kDepth; ++l) {
        init_conv(s, "conv" + std::to_string(l),
                  detail::conv_spec(cfg, l == 0 ? cfg.in_dim : h), rng);
        detail::init_bn(s, "bn" + std::to_string(l), h);
      }
      break;
    case Arch::kGraphUnet:
      for (std::uint32_t l = 0; l < kDepth; ++l) {
        init_conv(s, "enc" + std::to_string(l),
                  detail::conv_spec(cfg, l == 0 ? cfg.in_dim : h), rng);
        detail::init_bn(s, "enc" + std::to_string(l) + ".bn", h);
      }
      init_conv(s, "mid", detail::conv_spec(cfg, h), rng);
      detail::init_bn(s, "mid.bn", h);
      for (std::uint32_t l = 0; l < kDepth; ++l) {
        init_conv(s, "dec" + std::to_string(l), detail::conv_spec(cfg, 2 * h), rng);
        detail::init_bn(s, "dec" + std::to_string(l) + ".bn", h);
      }
      break;
    case Arch::kBaseCnn:
      for (std::uint32_t l = 0; l < kDepth; ++l) {
        detail::init_cnn_conv(s, "c" + std::to_string(l), l == 0 ? cfg.in_dim : h, h, 3, rng);
        detail::init_bn(s, "bn" + std::to_string(l), h);
      }
      detail::init_cnn_conv(s, "out", h, cfg.classes, 1, rng);
      return s;
  }
  init_linear(s, "out", h, cfg.classes, rng);
  return s;
}

/// Node logits (N x K) of a graph model. `pool_rng` drives Graclus visit order.
template <typename T>
Var<T> forward_graph(const ModelConfig& cfg, ParamBinder<T>& p, Var<T> x, const Graph& g,
                     bool training, Rng& pool_rng) {
  if (!cfg.is_graph()) throw ValidationError("basecnn is not a graph model");
  ad::detail::require(x.cols() == cfg.in_dim, "forward",
                      "input width " + std::to_string(x.cols()) + " vs model " +
                          std::to_string(cfg.in_dim));
  Var<T> h = x;
  auto block = [&](const std::string& conv, const std::string& norm, Var<T> in, const Graph& gr) {
    const ConvSpec spec = detail::conv_spec(cfg, static_cast<std::uint32_t>(in.cols()));
    return ad::relu(detail::bn(p, norm, graph_conv(p, conv, spec, in, gr), training));
  };
  switch (cfg.arch) {
    case Arch::kBaseMlp:
      for (std::uint32_t l = 0; l < kDepth; ++l) {
        const std::string i = std::to_string(l);
        h = ad::relu(detail::bn(p, "bn" + i, linear(p, "l" + i, h), training));
      }
      break;
    case Arch::kBaseGnn:
      for (std::uint32_t l = 0; l < kDepth; ++l) {
        const std::string i = std::to_string(l);
        h = block("conv" + i, "bn" + i, h, g);
      }
      break;
    case Arch::kGraphUnet: {
      std::vector<Graph> graphs{g};
      std::vector<PoolRecord> records;
      std::vector<Var<T>> skips;
      for (std::uint32_t l = 0; l < kDepth; ++l) {
        const std::string name = "enc" + std::to_string(l);
        h = block(name, name + ".bn", h, graphs.back());
        skips.push_back(h);
        records.push_back(graclus_match(graphs.back(), h.value(), pool_rng));
        graphs.push_back(coarsen(graphs.back(), records.back()));
        h = graclus_pool(h, records.back());
      }
      h = block("mid", "mid.bn", h, graphs.back());
      for (std::uint32_t l = kDepth; l-- > 0;) {
        const std::string name = "dec" + std::to_string(l);
        h = ad::concat_cols<T>({skips[l], graclus_unpool(h, records[l])});
        h = block(name, name + ".bn", h, graphs[l]);
      }
      break;
    }
    case Arch::kBaseCnn:
      break;
  }
  return linear(p, "out", h);
}

/// Pixel logits ((B*H*W) x K) of the convolutional model.
template <typename T>
Var<T> forward_cnn(const ModelConfig& cfg, ParamBinder<T>& p, Var<T> x, ad::ImageGeometry geo,
                   bool training) {
  if (cfg.arch != Arch::kBaseCnn) throw ValidationError("forward_cnn needs the basecnn model");
  ad::detail::require(x.cols() == cfg.in_dim, "forward",
                      "input channels " + std::to_string(x.cols()) + " vs model " +
                          std::to_string(cfg.in_dim));
  Var<T> h = x;
  ad::ImageGeometry g = geo;
  if (cfg.resize) {
    h = ad::bilinear_resize(h, geo, cfg.resize_to, cfg.resize_to);
    g = {geo.batch, cfg.resize_to, cfg.resize_to};
  }
  for (std::uint32_t l = 0; l < kDepth; ++l) {
    const std::string i = std::to_string(l);
    h = ad::conv2d(h, g, p("c" + i + ".W"), p("c" + i + ".b"), 3);
    h = ad::relu(detail::bn(p, "bn" + i, h, training));
  }
  if (cfg.resize) h = ad::bilinear_resize(h, g, geo.height, geo.width);
  return ad::conv2d(h, geo, p("out.W"), p("out.b"), 1);
}

}  // namespace lcslab::models
