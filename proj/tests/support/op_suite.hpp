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


// Random gradient-check instances for every differentiable operation.

#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "lcslab/ad/nn.hpp"
#include "lcslab/ad/ops.hpp"
#include "lcslab/ad/param_store.hpp"
#include "lcslab/models/aggregate.hpp"
#include "lcslab/models/graclus.hpp"
#include "lcslab/models/graph_conv.hpp"
#include "lcslab/train/trainer.hpp"
#include "support/generators.hpp"
#include "support/gradcheck.hpp"

namespace lcslab::testing {

using V = ad::Var<double>;
using T = ad::Tape<double>;
using Vars = std::vector<V>;

struct OpCase {
  std::string name;
  std::function<GradCheck(Rng&)> make;
};

inline std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

inline std::vector<std::uint32_t> random_ids(Rng& rng, std::size_t n, std::uint32_t segments) {
  std::vector<std::uint32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i < segments ? static_cast<std::uint32_t>(i) : static_cast<std::uint32_t>(rng.below(segments));
  rng.shuffle(std::span(ids));
  return ids;
}

/// Entries in [-1, -1e-3] u [1e-3, 1]: finite differences are meaningless
/// across the kink of a piecewise-linear activation.
inline Mat away_from_zero(Rng& rng, std::size_t r, std::size_t c) {
  Mat m = random_matrix(rng, r, c);
  for (auto& v : m.values()) v = v < 0 ? std::min(v, -1e-3) : std::max(v, 1e-3);
  return m;
}

inline GradCheck unary(Rng& rng, std::size_t r, std::size_t c, Fn f) {
  return GradCheck(std::move(f), {random_matrix(rng, r, c)}, rng.next());
}

/// One graph operator with every parameter exposed as a checked input.
inline GradCheck graph_op_case(Rng& rng, models::ConvKind kind) {
  const auto n = static_cast<std::uint32_t>(dim(rng, 1, 6));
  const Graph g = random_graph(rng, n, 0.5);
  models::ConvSpec spec;
  spec.kind = kind;
  spec.in = static_cast<std::uint32_t>(dim(rng, 1, 4));
  spec.heads = (kind == models::ConvKind::kGat || kind == models::ConvKind::kGt)
                   ? static_cast<std::uint32_t>(dim(rng, 1, 2))
                   : 1;
  spec.out = spec.heads * static_cast<std::uint32_t>(dim(rng, 1, 3));
  spec.concat = kind != models::ConvKind::kGat || rng.below(2) == 0;
  ad::ParamStore<double> store;
  Rng init(rng.next());
  models::init_conv(store, "c", spec, init);
  std::vector<std::string> names;
  std::vector<Mat> inputs{random_matrix(rng, n, spec.in)};
  for (const auto& [name, e] : store.entries()) {
    names.push_back(name);
    inputs.push_back(random_matrix(rng, e.value.rows(), e.value.cols()));
  }
  return GradCheck(
      [g, spec, names](T& tape, const Vars& v) {
        ad::ParamStore<double> empty;
        ad::ParamBinder<double> p(tape, empty, true);
        for (std::size_t i = 0; i < names.size(); ++i) p.bind(names[i], v[i + 1]);
        return models::graph_conv(p, "c", spec, v[0], g);
      },
      std::move(inputs), rng.next());
}

inline std::vector<OpCase> op_suite() {
  std::vector<OpCase> s;
  s.push_back({"matmul", [](Rng& rng) {
                 const auto n = dim(rng, 1, 4), k = dim(rng, 1, 4), m = dim(rng, 1, 4);
                 return GradCheck([](T&, const Vars& v) { return ad::matmul(v[0], v[1]); },
                                  {random_matrix(rng, n, k), random_matrix(rng, k, m)}, rng.next());
               }});
  s.push_back({"add", [](Rng& rng) {
                 const auto n = dim(rng, 1, 4), m = dim(rng, 1, 4);
                 return GradCheck([](T&, const Vars& v) { return ad::add(v[0], v[1]); },
                                  {random_matrix(rng, n, m), random_matrix(rng, n, m)}, rng.next());
               }});
  s.push_back({"add_row", [](Rng& rng) {
                 const auto n = dim(rng, 1, 4), m = dim(rng, 1, 4);
                 return GradCheck([](T&, const Vars& v) { return ad::add_row(v[0], v[1]); },
                                  {random_matrix(rng, n, m), random_matrix(rng, 1, m)}, rng.next());
               }});
  s.push_back({"mul", [](Rng& rng) {
                 const auto n = dim(rng, 1, 4), m = dim(rng, 1, 4);
                 return GradCheck([](T&, const Vars& v) { return ad::mul(v[0], v[1]); },
                                  {random_matrix(rng, n, m), random_matrix(rng, n, m)}, rng.next());
               }});
  s.push_back({"mul_row", [](Rng& rng) {
                 const auto n = dim(rng, 1, 4), m = dim(rng, 1, 4);
                 return GradCheck([](T&, const Vars& v) { return ad::mul_row(v[0], v[1]); },
                                  {random_matrix(rng, n, m), random_matrix(rng, 1, m)}, rng.next());
               }});
  s.push_back({"scale", [](Rng& rng) {
                 const double k = rng.uniform(-2, 2);
                 return unary(rng, dim(rng, 1, 4), dim(rng, 1, 4),
                              [k](T&, const Vars& v) { return ad::scale(v[0], k); });
               }});
  s.push_back({"relu", [](Rng& rng) {
                 return GradCheck([](T&, const Vars& v) { return ad::relu(v[0]); },
                                  {away_from_zero(rng, dim(rng, 1, 5), dim(rng, 1, 5))}, rng.next());
               }});
  s.push_back({"leaky_relu", [](Rng& rng) {
                 return GradCheck([](T&, const Vars& v) { return ad::leaky_relu(v[0], 0.2); },
                                  {away_from_zero(rng, dim(rng, 1, 5), dim(rng, 1, 5))}, rng.next());
               }});
  s.push_back({"concat_cols", [](Rng& rng) {
                 const auto n = dim(rng, 1, 4);
                 return GradCheck(
                     [](T&, const Vars& v) { return ad::concat_cols<double>({v[0], v[1], v[0]}); },
                     {random_matrix(rng, n, dim(rng, 1, 3)), random_matrix(rng, n, dim(rng, 1, 3))},
                     rng.next());
               }});
  s.push_back({"slice_cols", [](Rng& rng) {
                 const auto m = dim(rng, 1, 5);
                 const auto b = dim(rng, 0, m - 1);
                 const auto c = dim(rng, 1, m - b);
                 return unary(rng, dim(rng, 1, 4), m,
                              [b, c](T&, const Vars& v) { return ad::slice_cols(v[0], b, c); });
               }});
  s.push_back({"gather_rows", [](Rng& rng) {
                 const auto n = dim(rng, 1, 5);
                 std::vector<std::uint32_t> idx(dim(rng, 1, 7));
                 for (auto& i : idx) i = static_cast<std::uint32_t>(rng.below(n));
                 return unary(rng, n, dim(rng, 1, 3),
                              [idx](T&, const Vars& v) { return ad::gather_rows(v[0], idx); });
               }});
  s.push_back({"segment_sum", [](Rng& rng) {
                 const auto n = dim(rng, 1, 7);
                 const auto segs = static_cast<std::uint32_t>(dim(rng, 1, n));
                 const auto ids = random_ids(rng, n, segs);
                 return unary(rng, n, dim(rng, 1, 3), [ids, segs](T&, const Vars& v) {
                   return ad::segment_sum(v[0], ids, segs);
                 });
               }});
  s.push_back({"segment_mean", [](Rng& rng) {
                 const auto n = dim(rng, 1, 7);
                 const auto segs = static_cast<std::uint32_t>(dim(rng, 1, n));
                 const auto ids = random_ids(rng, n, segs);
                 return unary(rng, n, dim(rng, 1, 3), [ids, segs](T&, const Vars& v) {
                   return ad::segment_mean(v[0], ids, segs);
                 });
               }});
  s.push_back({"sum_col_groups", [](Rng& rng) {
                 const auto g = dim(rng, 1, 3);
                 return unary(rng, dim(rng, 1, 4), g * dim(rng, 1, 3),
                              [g](T&, const Vars& v) { return ad::sum_col_groups(v[0], g); });
               }});
  s.push_back({"mean_col_blocks", [](Rng& rng) {
                 const auto b = dim(rng, 1, 3);
                 return unary(rng, dim(rng, 1, 4), b * dim(rng, 1, 3),
                              [b](T&, const Vars& v) { return ad::mean_col_blocks(v[0], b); });
               }});
  s.push_back({"segment_softmax", [](Rng& rng) {
                 const auto n = dim(rng, 1, 8);
                 const auto segs = static_cast<std::uint32_t>(dim(rng, 1, n));
                 const auto ids = random_ids(rng, n, segs);
                 return GradCheck([ids, segs](T&, const Vars& v) {
                   return ad::segment_softmax(v[0], ids, segs);
                 }, {random_matrix(rng, n, dim(rng, 1, 3), -2, 2)}, rng.next());
               }});
  s.push_back({"propagate", [](Rng& rng) {
                 const auto n = dim(rng, 1, 5), heads = dim(rng, 1, 2), d = dim(rng, 1, 3);
                 const auto e = dim(rng, 1, 8);
                 const auto out = static_cast<std::uint32_t>(dim(rng, 1, 5));
                 std::vector<std::uint32_t> src(e), dst(e);
                 for (std::size_t i = 0; i < e; ++i) {
                   src[i] = static_cast<std::uint32_t>(rng.below(n));
                   dst[i] = static_cast<std::uint32_t>(rng.below(out));
                 }
                 return GradCheck([src, dst, out](T&, const Vars& v) {
                   return ad::propagate(v[0], v[1], src, dst, out);
                 }, {random_matrix(rng, n, heads * d), random_matrix(rng, e, heads)}, rng.next());
               }});
  s.push_back({"log_softmax_rows", [](Rng& rng) {
                 return GradCheck([](T&, const Vars& v) { return ad::log_softmax_rows(v[0]); },
                                  {random_matrix(rng, dim(rng, 1, 4), dim(rng, 1, 6), -3, 3)},
                                  rng.next());
               }});
  s.push_back({"pick", [](Rng& rng) {
                 const auto n = dim(rng, 1, 4), m = dim(rng, 1, 4);
                 std::vector<std::uint32_t> rows(dim(rng, 1, 6)), cols(rows.size());
                 for (std::size_t i = 0; i < rows.size(); ++i) {
                   rows[i] = static_cast<std::uint32_t>(rng.below(n));
                   cols[i] = static_cast<std::uint32_t>(rng.below(m));
                 }
                 return unary(rng, n, m,
                              [rows, cols](T&, const Vars& v) { return ad::pick(v[0], rows, cols); });
               }});
  s.push_back({"sum_all", [](Rng& rng) {
                 return unary(rng, dim(rng, 1, 4), dim(rng, 1, 4),
                              [](T&, const Vars& v) { return ad::sum_all(v[0]); });
               }});
  s.push_back({"mean_all", [](Rng& rng) {
                 return unary(rng, dim(rng, 1, 4), dim(rng, 1, 4),
                              [](T&, const Vars& v) { return ad::mean_all(v[0]); });
               }});
  s.push_back({"batch_norm_train", [](Rng& rng) {
                 const auto n = dim(rng, 2, 6), d = dim(rng, 1, 3);
                 return GradCheck([d](T&, const Vars& v) {
                   Matrix<double> rm(1, d), rv(1, d, 1.0);
                   return ad::batch_norm(v[0], v[1], v[2], rm, rv, true);
                 }, {random_matrix(rng, n, d, -2, 2), random_matrix(rng, 1, d, 0.5, 2),
                     random_matrix(rng, 1, d)}, rng.next());
               }});
  s.push_back({"batch_norm_eval", [](Rng& rng) {
                 const auto n = dim(rng, 1, 5), d = dim(rng, 1, 3);
                 const Mat rm = random_matrix(rng, 1, d), rv = random_matrix(rng, 1, d, 0.5, 2);
                 return GradCheck([rm, rv](T&, const Vars& v) {
                   Matrix<double> m = rm, var = rv;
                   return ad::batch_norm(v[0], v[1], v[2], m, var, false);
                 }, {random_matrix(rng, n, d), random_matrix(rng, 1, d), random_matrix(rng, 1, d)},
                                  rng.next());
               }});
  s.push_back({"conv2d", [](Rng& rng) {
                 const ad::ImageGeometry geo{static_cast<std::uint32_t>(dim(rng, 1, 2)),
                                             static_cast<std::uint32_t>(dim(rng, 1, 4)),
                                             static_cast<std::uint32_t>(dim(rng, 1, 4))};
                 const auto cin = dim(rng, 1, 3), cout = dim(rng, 1, 3);
                 const std::uint32_t k = rng.below(3) == 0 ? 1 : 3;
                 return GradCheck([geo, k](T&, const Vars& v) {
                   return ad::conv2d(v[0], geo, v[1], v[2], k);
                 }, {random_matrix(rng, geo.rows(), cin), random_matrix(rng, cout, cin * k * k),
                     random_matrix(rng, 1, cout)}, rng.next());
               }});
  s.push_back({"bilinear_resize", [](Rng& rng) {
                 const ad::ImageGeometry geo{static_cast<std::uint32_t>(dim(rng, 1, 2)),
                                             static_cast<std::uint32_t>(dim(rng, 1, 4)),
                                             static_cast<std::uint32_t>(dim(rng, 1, 4))};
                 const auto oh = static_cast<std::uint32_t>(dim(rng, 1, 7));
                 const auto ow = static_cast<std::uint32_t>(dim(rng, 1, 7));
                 return unary(rng, geo.rows(), dim(rng, 1, 2), [geo, oh, ow](T&, const Vars& v) {
                   return ad::bilinear_resize(v[0], geo, oh, ow);
                 });
               }});
  s.push_back({"gcn", [](Rng& rng) { return graph_op_case(rng, models::ConvKind::kGcn); }});
  s.push_back({"sage", [](Rng& rng) { return graph_op_case(rng, models::ConvKind::kSage); }});
  s.push_back({"gat", [](Rng& rng) { return graph_op_case(rng, models::ConvKind::kGat); }});
  s.push_back({"gt", [](Rng& rng) { return graph_op_case(rng, models::ConvKind::kGt); }});
  s.push_back({"pool_unpool", [](Rng& rng) {
                 // skip ++ unpool(relu(pool(x) W)), the GraphUNet level structure.
                 const auto n = static_cast<std::uint32_t>(dim(rng, 1, 7));
                 const auto d = dim(rng, 1, 3);
                 const Graph g = random_graph(rng, n, 0.5);
                 Mat x = random_matrix(rng, n, d);
                 const auto rec = models::graclus_match(g, x, rng);
                 return GradCheck([rec](T&, const Vars& v) {
                   auto pooled = models::graclus_pool(v[0], rec);
                   auto mixed = ad::relu(ad::matmul(pooled, v[1]));
                   return ad::concat_cols<double>({v[0], models::graclus_unpool(mixed, rec)});
                 }, {x, random_matrix(rng, d, dim(rng, 1, 3))}, rng.next());
               }});
  s.push_back({"segment_aggregate", [](Rng& rng) {
                 const auto n = dim(rng, 1, 8);
                 const auto segs = static_cast<std::uint32_t>(dim(rng, 1, n));
                 const auto ids = random_ids(rng, n, segs);
                 return unary(rng, n, dim(rng, 2, 4), [ids, segs](T&, const Vars& v) {
                   return models::aggregate_by_segment(v[0], ids, segs);
                 });
               }});
  s.push_back({"partial_cross_entropy", [](Rng& rng) {
                 const auto n = dim(rng, 1, 6), k = dim(rng, 2, 5);
                 std::vector<std::uint32_t> rows(dim(rng, 1, 5)), cls(rows.size());
                 for (std::size_t i = 0; i < rows.size(); ++i) {
                   rows[i] = static_cast<std::uint32_t>(rng.below(n));
                   cls[i] = static_cast<std::uint32_t>(rng.below(k));
                 }
                 return GradCheck([rows, cls](T&, const Vars& v) {
                   return train::partial_cross_entropy(v[0], rows, cls);
                 }, {random_matrix(rng, n, k, -3, 3)}, rng.next());
               }});
  return s;
}

}  // namespace lcslab::testing
