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

// Graph convolution operators over a Graph whose edges run src -> dst.
//
// Parameter names are "<prefix>.<tensor>"; every operator has a bias "b".
//   gcn:  W (in x out)
//   sage: W_self, W_neigh (in x out)
//   gat:  W (in x H*d), a_dst, a_src (1 x H*d)
//   gt:   W_qry, W_key, W_val, W_root (in x H*d)
// For gat/gt with concatenated heads d = out / H; averaged gat heads use d = out.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lcslab/ad/ops.hpp"
#include "lcslab/ad/param_store.hpp"
#include "lcslab/graph/graph.hpp"
#include "lcslab/rng.hpp"

namespace lcslab::models {

using ad::ParamBinder;
using ad::ParamStore;
using ad::Var;

enum class ConvKind { kGcn, kSage, kGat, kGt };

inline const char* conv_name(ConvKind k) {
  switch (k) {
    case ConvKind::kGcn: return "gcn";
    case ConvKind::kSage: return "sage";
    case ConvKind::kGat: return "gat";
    case ConvKind::kGt: return "gt";
  }
  return "?";
}

inline ConvKind parse_conv(const std::string& s) {
  if (s == "gcn") return ConvKind::kGcn;
  if (s == "sage") return ConvKind::kSage;
  if (s == "gat") return ConvKind::kGat;
  if (s == "gt") return ConvKind::kGt;
  throw ConfigError("unknown graph operator '" + s + "' (expected gcn|sage|gat|gt)");
}

struct ConvSpec {
  ConvKind kind = ConvKind::kGcn;
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  std::uint32_t heads = 1;
  bool concat = true;  // gat only; gt always concatenates

  std::uint32_t head_dim() const {
    return (kind == ConvKind::kGat && !concat) ? out : out / heads;
  }
  std::uint32_t proj_width() const { return head_dim() * heads; }

  void check() const {
    if (in == 0 || out == 0) throw ValidationError("graph conv widths must be positive");
    if (heads == 0) throw ValidationError("attention heads must be at least 1");
    const bool multi = kind == ConvKind::kGat || kind == ConvKind::kGt;
    if (multi && proj_width() != out && !(kind == ConvKind::kGat && !concat)) {
      throw ValidationError("output width " + std::to_string(out) +
                            " is not divisible by " + std::to_string(heads) + " heads");
    }
  }
};

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
Matrix<T> glorot(Rng& rng, std::size_t rows, std::size_t cols, double fan_in, double fan_out) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix<T> m(rows, cols);
  for (auto& v : m.values()) v = static_cast<T>(rng.uniform(-a, a));
  return m;
}

template <typename T>
void init_linear(ParamStore<T>& store, const std::string& prefix, std::uint32_t in,
                 std::uint32_t out, Rng& rng) {
  store.add(prefix + ".W", glorot<T>(rng, in, out, in, out));
  store.add(prefix + ".b", Matrix<T>(1, out));
}

template <typename T>
Var<T> linear(ParamBinder<T>& p, const std::string& prefix, Var<T> x) {
  return ad::add_row(ad::matmul(x, p(prefix + ".W")), p(prefix + ".b"));
}

template <typename T>
void init_conv(ParamStore<T>& store, const std::string& prefix, const ConvSpec& spec, Rng& rng) {
  spec.check();
  const std::uint32_t in = spec.in, out = spec.out, pw = spec.proj_width();
  switch (spec.kind) {
    case ConvKind::kGcn:
      store.add(prefix + ".W", glorot<T>(rng, in, out, in, out));
      break;
    case ConvKind::kSage:
      store.add(prefix + ".W_self", glorot<T>(rng, in, out, in, out));
      store.add(prefix + ".W_neigh", glorot<T>(rng, in, out, in, out));
      break;
    case ConvKind::kGat:
      store.add(prefix + ".W", glorot<T>(rng, in, pw, in, pw));
      store.add(prefix + ".a_dst", glorot<T>(rng, 1, pw, spec.head_dim(), 1));
      store.add(prefix + ".a_src", glorot<T>(rng, 1, pw, spec.head_dim(), 1));
      break;
    case ConvKind::kGt:
      for (const char* n : {".W_qry", ".W_key", ".W_val", ".W_root"}) {
        store.add(prefix + n, glorot<T>(rng, in, pw, in, pw));
      }
      break;
  }
  store.add(prefix + ".b", Matrix<T>(1, out));
}

/// Symmetric-normalised edge weights 1 / sqrt(deg(src) deg(dst)).
inline std::vector<double> gcn_edge_weights(const Graph& g) {
  if (!g.has_all_self_loops()) throw ValidationError("GCN requires a self-loop on every node");
  const auto deg = g.degrees();
  std::vector<double> w(g.num_edges());
  for (std::size_t e = 0; e < w.size(); ++e) {
    w[e] = 1.0 / std::sqrt(static_cast<double>(deg[g.src[e]]) * deg[g.dst[e]]);
  }
  return w;
}

/// Applies one graph convolution. When `attention` is non-null and the
/// operator uses attention, it receives the E x H coefficient matrix.
template <typename T>
Var<T> graph_conv(ParamBinder<T>& p, const std::string& prefix, const ConvSpec& spec, Var<T> x,
                  const Graph& g, Var<T>* attention = nullptr) {
  spec.check();
  ad::detail::require(x.rows() == g.num_nodes, "graph_conv",
                      "feature rows " + std::to_string(x.rows()) + " vs " +
                          std::to_string(g.num_nodes) + " nodes");
  ad::detail::require(x.cols() == spec.in, "graph_conv",
                      "feature width " + std::to_string(x.cols()) + " vs expected " +
                          std::to_string(spec.in));
  auto& tape = p.tape();
  const std::uint32_t n = g.num_nodes;
  Var<T> out;
  switch (spec.kind) {
    case ConvKind::kGcn: {
      const auto w = gcn_edge_weights(g);
      Matrix<T> wm(w.size(), 1);
      for (std::size_t e = 0; e < w.size(); ++e) wm[e] = static_cast<T>(w[e]);
      out = ad::propagate(ad::matmul(x, p(prefix + ".W")), tape.constant(std::move(wm)), g.src,
                          g.dst, n);
      break;
    }
    case ConvKind::kSage: {
      std::vector<std::uint32_t> count(n, 0), src, dst;
      for (std::size_t e = 0; e < g.num_edges(); ++e) {
        if (g.src[e] == g.dst[e]) continue;
        ++count[g.dst[e]];
        src.push_back(g.src[e]);
        dst.push_back(g.dst[e]);
      }
      Matrix<T> wm(src.size(), 1);
      for (std::size_t e = 0; e < src.size(); ++e) wm[e] = T{1} / static_cast<T>(count[dst[e]]);
      auto neigh = ad::propagate(ad::matmul(x, p(prefix + ".W_neigh")),
                                 tape.constant(std::move(wm)), std::move(src), std::move(dst), n);
      out = ad::add(ad::matmul(x, p(prefix + ".W_self")), neigh);
      break;
    }
    case ConvKind::kGat: {
      const std::size_t d = spec.head_dim();
      auto h = ad::matmul(x, p(prefix + ".W"));
      auto s_dst = ad::sum_col_groups(ad::mul_row(h, p(prefix + ".a_dst")), d);
      auto s_src = ad::sum_col_groups(ad::mul_row(h, p(prefix + ".a_src")), d);
      auto score = ad::leaky_relu(ad::add(ad::gather_rows(s_dst, g.dst), ad::gather_rows(s_src, g.src)),
                                  T(0.2));
      auto att = ad::segment_softmax(score, g.dst, n);
      if (attention) *attention = att;
      out = ad::propagate(h, att, g.src, g.dst, n);
      if (!spec.concat && spec.heads > 1) out = ad::mean_col_blocks(out, spec.heads);
      break;
    }
    case ConvKind::kGt: {
      const std::size_t d = spec.head_dim();
      auto q = ad::matmul(x, p(prefix + ".W_qry"));
      auto k = ad::matmul(x, p(prefix + ".W_key"));
      auto v = ad::matmul(x, p(prefix + ".W_val"));
      auto score = ad::scale(
          ad::sum_col_groups(ad::mul(ad::gather_rows(q, g.dst), ad::gather_rows(k, g.src)), d),
          static_cast<T>(1.0 / std::sqrt(static_cast<double>(d))));
      auto att = ad::segment_softmax(score, g.dst, n);
      if (attention) *attention = att;
      out = ad::add(ad::matmul(x, p(prefix + ".W_root")), ad::propagate(v, att, g.src, g.dst, n));
      break;
    }
  }
  return ad::add_row(out, p(prefix + ".b"));
}

}  // namespace lcslab::models
