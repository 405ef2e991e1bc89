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

// Sparse-label training loop, plateau schedule and prediction.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lcslab/ad/param_store.hpp"
#include "lcslab/metrics/metrics.hpp"
#include "lcslab/models/aggregate.hpp"
#include "lcslab/train/pipeline.hpp"

namespace lcslab::train {

using ad::ParamBinder;
using ad::ParamStore;
using ad::Tape;
using ad::Var;

struct TrainConfig {
  std::uint32_t epochs = 20;
  double lr = 1e-4;
  std::uint32_t patience = 2;
  double factor = 0.5;
  std::uint32_t batch = 8;
  std::uint64_t seed = 0;
  std::uint32_t repeats = 3;

  void check() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("lr factor must lie in (0, 1)");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (batch < 1) throw ConfigError("batch size must be at least 1");
    if (repeats < 1) throw ConfigError("repeats must be at least 1");
  }
};

/// Multiplies the learning rate by `factor` after `patience` consecutive
/// epochs without a strict improvement of the monitored accuracy.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, std::uint32_t patience, double factor)
      : lr_(lr), patience_(patience), factor_(factor) {}

  /// Records one epoch's metric and returns the learning rate to use next.
  double step(double metric) {
    if (metric > best_) {
      best_ = metric;
      bad_ = 0;
    } else if (++bad_ >= patience_) {
      lr_ *= factor_;
      bad_ = 0;
    }
    return lr_;
  }

  double lr() const { return lr_; }

 private:
  double lr_;
  std::uint32_t patience_;
  double factor_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::uint32_t bad_ = 0;
};

struct EpochLog {
  std::uint32_t epoch = 0;
  double loss = 0;
  double val_oa = 0;
  double lr = 0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::uint32_t best_epoch = 0;
  double best_val_oa = 0;

  std::string to_csv() const {
    std::string out = "epoch,loss,val_oa,lr\n";
    char buf[160];
    for (const auto& e : epochs) {
      std::snprintf(buf, sizeof buf, "%u,%.9g,%.9g,%.9g\n", e.epoch, e.loss, e.val_oa, e.lr);
      out += buf;
    }
    return out;
  }
};

struct TrainResult {
  ParamStore<float> params;  // best validation checkpoint
  TrainLog log;
};

/// Mean negative log-softmax of logits(rows[l]) at class cls[l].
template <typename T>
Var<T> partial_cross_entropy(Var<T> logits, const std::vector<std::uint32_t>& rows,
                             const std::vector<std::uint32_t>& cls) {
  if (rows.empty()) throw TrainingError("no labelled pixels in the batch");
  std::vector<std::uint32_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0u);
  auto lp = ad::log_softmax_rows(ad::gather_rows(logits, rows));
  return ad::scale(ad::mean_all(ad::pick(lp, std::move(idx), cls)), T{-1});
}

/// Logits at the labelled pixels of a batch (one row per label, batch order)
/// plus their classes.
template <typename T>
struct LabelLogits {
  Var<T> logits;
  std::vector<std::uint32_t> cls;
};

template <typename T>
LabelLogits<T> label_logits(const PipelineConfig& cfg, ParamBinder<T>& p,
                            std::span<const Prepared* const> batch, bool training, Rng& pool_rng) {
  auto& tape = p.tape();
  LabelLogits<T> out;
  std::size_t rows = 0;
  for (const Prepared* s : batch) rows += s->x.rows();
  const std::size_t width = batch.front()->x.cols();
  Matrix<T> x(rows, width);
  std::size_t r = 0;
  for (const Prepared* s : batch) {
    if (s->x.cols() != width) throw ValidationError("batch samples differ in input width");
    for (std::size_t i = 0; i < s->x.size(); ++i) x[r * width + i] = static_cast<T>(s->x[i]);
    r += s->x.rows();
  }
  std::vector<std::uint32_t> label_rows;
  if (cfg.model.is_graph()) {
    std::vector<const Graph*> graphs;
    for (const Prepared* s : batch) graphs.push_back(&s->graph);
    auto [g, offsets] = disjoint_union(std::span<const Graph* const>(graphs));
    auto logits = models::forward_graph(cfg.model, p, tape.constant(std::move(x)), g, training, pool_rng);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t l = 0; l < batch[b]->label_px.size(); ++l) {
        label_rows.push_back(offsets[b] + batch[b]->seg.ids.data[batch[b]->label_px[l]]);
        out.cls.push_back(batch[b]->label_cls[l]);
      }
    }
    out.logits = ad::gather_rows(logits, std::move(label_rows));
    return out;
  }
  const std::uint32_t h = batch.front()->height, w = batch.front()->width;
  for (const Prepared* s : batch) {
    if (s->height != h || s->width != w) throw ValidationError("batch samples differ in size");
  }
  const ad::ImageGeometry geo{static_cast<std::uint32_t>(batch.size()), h, w};
  auto logits = models::forward_cnn(cfg.model, p, tape.constant(std::move(x)), geo, training);
  const std::size_t plane = std::size_t{h} * w;
  const bool aggregate =
      cfg.agg == Aggregation::kOutput && cfg.seg.mode != SegmentationMode::kTrivial;
  if (aggregate) {
    std::vector<std::uint32_t> ids;
    ids.reserve(batch.size() * plane);
    std::uint32_t base = 0;
    for (const Prepared* s : batch) {
      for (std::uint32_t id : s->seg.ids.data) ids.push_back(base + id);
      for (std::size_t l = 0; l < s->label_px.size(); ++l) {
        label_rows.push_back(base + s->seg.ids.data[s->label_px[l]]);
        out.cls.push_back(s->label_cls[l]);
      }
      base += s->seg.count;
    }
    logits = ad::segment_mean(logits, std::move(ids), base);
  } else {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t l = 0; l < batch[b]->label_px.size(); ++l) {
        label_rows.push_back(static_cast<std::uint32_t>(b * plane + batch[b]->label_px[l]));
        out.cls.push_back(batch[b]->label_cls[l]);
      }
    }
  }
  out.logits = ad::gather_rows(logits, std::move(label_rows));
  return out;
}

/// Rng for Graclus during inference; fixed so predictions are reproducible.
inline Rng inference_pool_rng() { return Rng(derive_seed(0, 0x9e7)); }

/// Pixel logits ((H*W) x K) of one sample in inference mode.
inline Matrix<float> pixel_logits(const PipelineConfig& cfg, ParamStore<float>& params,
                                  const Prepared& s) {
  Tape<float> tape;
  ParamBinder<float> p(tape, params, false);
  Rng pool = inference_pool_rng();
  auto x = tape.constant(s.x);
  if (cfg.model.is_graph()) {
    auto logits = models::forward_graph(cfg.model, p, x, s.graph, false, pool);
    return nodes_to_pixels(logits.value(), s.seg);
  }
  auto logits = models::forward_cnn(cfg.model, p, x, {1, s.height, s.width}, false);
  if (cfg.agg == Aggregation::kOutput && cfg.seg.mode != SegmentationMode::kTrivial) {
    return models::aggregate_logits_by_segment(logits.value(), s.seg);
  }
  return logits.value();
}

inline ClassMap predict(const PipelineConfig& cfg, ParamStore<float>& params, const Prepared& s) {
  const auto cls = models::argmax_rows(pixel_logits(cfg, params, s));
  ClassMap out(s.height, s.width);
  out.data.assign(cls.begin(), cls.end());
  return out;
}

/// Pooled OA(t = 0) over the labels of `samples`.
inline double validation_accuracy(const PipelineConfig& cfg, ParamStore<float>& params,
                                  const std::vector<Prepared>& samples) {
  metrics::Confusion conf(cfg.model.classes);
  for (const auto& s : samples) {
    SparseLabelSet labels;
    labels.classes = static_cast<std::uint16_t>(cfg.model.classes);
    for (std::size_t l = 0; l < s.label_px.size(); ++l) {
      labels.points.push_back({static_cast<std::uint16_t>(s.label_px[l] / s.width),
                               static_cast<std::uint16_t>(s.label_px[l] % s.width),
                               static_cast<std::uint16_t>(s.label_cls[l])});
    }
    conf.add(predict(cfg, params, s), labels, 0, kBorder);
  }
  return conf.total() == 0 ? 0.0 : conf.accuracy();
}

/// Trains from a seeded initialisation and returns the checkpoint with the
/// best validation OA (first epoch wins ties).
inline TrainResult train_model(const PipelineConfig& cfg, const TrainConfig& tc,
                               const std::vector<Prepared>& train_set,
                               const std::vector<Prepared>& val_set) {
  cfg.check();
  tc.check();
  if (train_set.empty()) throw ConfigError("training split is empty");
  if (val_set.empty()) throw ConfigError("validation split is empty");
  ParamStore<float> params = models::init_model<float>(cfg.model, tc.seed);
  Rng pool_rng(derive_seed(tc.seed, 0x9001));
  PlateauSchedule schedule(tc.lr, tc.patience, tc.factor);
  ad::AdamConfig adam;
  adam.lr = tc.lr;

  TrainResult result;
  result.log.best_val_oa = -1.0;
  std::vector<std::uint32_t> order(train_set.size());
  for (std::uint32_t epoch = 0; epoch < tc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0u);
    Rng shuffle_rng(derive_seed(tc.seed, 0x10000 + epoch));
    shuffle_rng.shuffle(std::span<std::uint32_t>(order));
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch) {
      std::vector<const Prepared*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + tc.batch); ++i) {
        batch.push_back(&train_set[order[i]]);
      }
      Tape<float> tape;
      ParamBinder<float> p(tape, params, true);
      auto ll = label_logits(cfg, p, std::span<const Prepared* const>(batch), true, pool_rng);
      if (ll.cls.empty()) continue;
      std::vector<std::uint32_t> rows(ll.cls.size());
      std::iota(rows.begin(), rows.end(), 0u);
      auto loss = partial_cross_entropy(ll.logits, rows, ll.cls);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(steps));
      }
      tape.backward(loss);
      params.adam_step(p.gradients(), adam);
      loss_sum += value;
      ++steps;
    }
    if (steps == 0) throw TrainingError("training split has no labels");
    const double val_oa = validation_accuracy(cfg, params, val_set);
    adam.lr = schedule.step(val_oa);
    result.log.epochs.push_back({epoch, loss_sum / static_cast<double>(steps), val_oa, adam.lr});
    if (val_oa > result.log.best_val_oa) {
      result.log.best_val_oa = val_oa;
      result.log.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

}  // namespace lcslab::train
