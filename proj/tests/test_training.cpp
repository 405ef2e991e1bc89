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

#include <cmath>
#include <numeric>
#include <vector>

#include "lcslab/metrics/metrics.hpp"
#include "lcslab/synth/landscape.hpp"
#include "lcslab/train/trainer.hpp"
#include "support/generators.hpp"
#include "support/gradcheck.hpp"

namespace lcslab::train {
namespace {

using M = Matrix<double>;

TEST(Plateau, HalvesAfterPatienceBadEpochs) {
  PlateauSchedule s(1.0, 2, 0.5);
  std::vector<double> lrs;
  for (int i = 0; i < 5; ++i) lrs.push_back(s.step(0.5));
  EXPECT_EQ(lrs, (std::vector<double>{1, 1, 0.5, 0.5, 0.25}));
}

TEST(Plateau, ImprovementResetsTheCounter) {
  PlateauSchedule s(1.0, 2, 0.1);
  EXPECT_EQ(s.step(0.1), 1.0);
  EXPECT_EQ(s.step(0.1), 1.0);
  EXPECT_EQ(s.step(0.2), 1.0);
  EXPECT_EQ(s.step(0.2), 1.0);
  EXPECT_NEAR(s.step(0.15), 0.1, 1e-15);
}

double pce(const M& logits, const std::vector<std::uint32_t>& rows, const std::vector<std::uint32_t>& cls,
           M* grad = nullptr) {
  ad::Tape<double> t;
  auto x = t.variable(logits);
  auto loss = partial_cross_entropy(x, rows, cls);
  t.backward(loss);
  if (grad) *grad = t.grad(x);
  return loss.value()[0];
}

TEST(PartialCrossEntropy, Examples) {
  EXPECT_NEAR(pce(M(1, 2, std::vector<double>{60, 0}), {0}, {0}), 0.0, 1e-15);
  EXPECT_NEAR(pce(M(2, 8), {1}, {3}), std::log(8.0), 1e-15);
  // Row 0: p(class 1) = 3/4. Row 1: uniform over 2.
  const M x(2, 2, std::vector<double>{0, std::log(3.0), 0, 0});
  EXPECT_NEAR(pce(x, {0, 1}, {1, 0}), (-std::log(0.75) + std::log(2.0)) / 2, 1e-15);
}

TEST(PartialCrossEntropy, GradientOnlyAtLabelledRows) {
  Rng rng(1);
  const M x = testing::random_matrix(rng, 6, 4, -3, 3);
  M g;
  pce(x, {1, 4, 4}, {0, 2, 3}, &g);
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t r : {0u, 2u, 3u, 5u}) EXPECT_EQ(g(r, j), 0.0);
  }
  // Closed form: (softmax - onehot) / n summed per row.
  for (std::size_t r : {1u, 4u}) {
    double z = 0;
    for (std::size_t j = 0; j < 4; ++j) z += std::exp(x(r, j));
    for (std::size_t j = 0; j < 4; ++j) {
      const double p = std::exp(x(r, j)) / z;
      const double expected = r == 1 ? (p - (j == 0)) / 3 : (2 * p - (j == 2) - (j == 3)) / 3;
      EXPECT_NEAR(g(r, j), expected, 1e-12);
    }
  }
  EXPECT_THROW(pce(x, {}, {}), TrainingError);
}

struct Fixture {
  PipelineConfig cfg;
  std::vector<Prepared> train, val;
};

Fixture fixture(models::Arch arch, Aggregation agg, std::uint32_t mmu, std::size_t count = 24) {
  synth::SynthConfig sc;
  sc.classes = 3;
  sc.channels = 2;
  sc.height = 20;
  sc.width = 20;
  sc.blobs = 4;
  sc.labels_per_patch = 2;
  sc.seed = 11;
  const auto data = synth::synth_dataset(sc, count, {0.25, 0.0, 2}).dataset;
  Fixture f;
  f.cfg.seg = SegmentationConfig::for_mmu(mmu, 0.1);
  f.cfg.agg = agg;
  f.cfg.model.arch = arch;
  f.cfg.model.op = models::ConvKind::kGt;
  f.cfg.model.hidden = 8;
  f.cfg.model.heads = 2;
  f.cfg.model.classes = 3;
  f.cfg.model.in_dim = f.cfg.input_dim(2);
  for (const auto& s : data.samples) {
    auto p = prepare(f.cfg, s.image, s.image, s.labels);
    (s.split == Split::kTrain ? f.train : f.val).push_back(std::move(p));
  }
  return f;
}

TrainConfig tconf(std::uint32_t epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.lr = 1e-2;
  tc.batch = 4;
  tc.seed = 3;
  return tc;
}

TEST(Trainer, SingleEpochIsTheBestEpoch) {
  auto f = fixture(models::Arch::kBaseGnn, Aggregation::kInput, 1);
  const auto r = train_model(f.cfg, tconf(1), f.train, f.val);
  ASSERT_EQ(r.log.epochs.size(), 1u);
  EXPECT_EQ(r.log.best_epoch, 0u);
  EXPECT_EQ(r.log.best_val_oa, r.log.epochs[0].val_oa);
  EXPECT_TRUE(std::isfinite(r.log.epochs[0].loss));
}

TEST(Trainer, IsDeterministic) {
  auto f = fixture(models::Arch::kGraphUnet, Aggregation::kInput, 5);
  const auto a = train_model(f.cfg, tconf(2), f.train, f.val);
  const auto b = train_model(f.cfg, tconf(2), f.train, f.val);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
}

TEST(Trainer, KeepsTheBestValidationCheckpoint) {
  auto f = fixture(models::Arch::kBaseMlp, Aggregation::kInput, 1);
  auto r = train_model(f.cfg, tconf(4), f.train, f.val);
  for (const auto& e : r.log.epochs) EXPECT_GE(r.log.best_val_oa, e.val_oa);
  EXPECT_EQ(r.log.epochs[r.log.best_epoch].val_oa, r.log.best_val_oa);
  EXPECT_EQ(validation_accuracy(f.cfg, r.params, f.val), r.log.best_val_oa);
  // The first epoch that reaches the best value wins.
  for (std::uint32_t e = 0; e < r.log.best_epoch; ++e) EXPECT_LT(r.log.epochs[e].val_oa, r.log.best_val_oa);
}

TEST(Trainer, LogsTheScheduledRate) {
  auto f = fixture(models::Arch::kBaseMlp, Aggregation::kInput, 1);
  auto tc = tconf(4);
  tc.patience = 1;
  const auto r = train_model(f.cfg, tc, f.train, f.val);
  PlateauSchedule s(tc.lr, tc.patience, tc.factor);
  for (const auto& e : r.log.epochs) EXPECT_EQ(e.lr, s.step(e.val_oa));
}

TEST(Trainer, PredictionsRespectTheMinimumMappingUnit) {
  for (auto agg : {Aggregation::kInput, Aggregation::kOutput}) {
    const auto arch = agg == Aggregation::kInput ? models::Arch::kBaseGnn : models::Arch::kBaseCnn;
    auto f = fixture(arch, agg, 10, 12);
    auto r = train_model(f.cfg, tconf(1), f.train, f.val);
    for (const auto& s : f.val) {
      const auto pred = predict(f.cfg, r.params, s);
      for (auto size : metrics::region_sizes(pred, 0)) EXPECT_GE(size, 10u);
      for (std::size_t p = 0; p < pred.size(); ++p) {
        for (std::size_t q = 0; q < pred.size(); ++q) {
          if (s.seg.ids.data[p] == s.seg.ids.data[q]) {
            ASSERT_EQ(pred.data[p], pred.data[q]);
          }
        }
      }
    }
  }
}

TEST(Trainer, BatchedLogitsMatchSingleSamples) {
  auto f = fixture(models::Arch::kBaseGnn, Aggregation::kInput, 5, 8);
  auto params = models::init_model<float>(f.cfg.model, 1);
  std::vector<const Prepared*> batch;
  for (const auto& s : f.train) batch.push_back(&s);
  Tape<float> t;
  ad::ParamBinder<float> p(t, params, false);
  Rng pool(0);
  const auto all = label_logits(f.cfg, p, std::span<const Prepared* const>(batch), false, pool);
  std::size_t row = 0;
  for (const Prepared* s : batch) {
    const auto logits = pixel_logits(f.cfg, params, *s);
    for (std::size_t l = 0; l < s->label_px.size(); ++l, ++row) {
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(all.logits.value()(row, k), logits(s->label_px[l], k), 1e-5);
      }
      EXPECT_EQ(all.cls[row], s->label_cls[l]);
    }
  }
  EXPECT_EQ(row, all.cls.size());
}

TEST(Trainer, RejectsBadSetups) {
  auto f = fixture(models::Arch::kBaseMlp, Aggregation::kInput, 1, 8);
  EXPECT_THROW(train_model(f.cfg, tconf(1), {}, f.val), ConfigError);
  EXPECT_THROW(train_model(f.cfg, tconf(1), f.train, {}), ConfigError);
  EXPECT_THROW(train_model(f.cfg, tconf(0), f.train, f.val), ConfigError);
  auto tc = tconf(1);
  tc.factor = 1.0;
  EXPECT_THROW(tc.check(), ConfigError);
  tc = tconf(1);
  tc.lr = 0;
  EXPECT_THROW(tc.check(), ConfigError);
  auto unlabeled = f.train;
  for (auto& s : unlabeled) {
    s.label_px.clear();
    s.label_cls.clear();
  }
  EXPECT_THROW(train_model(f.cfg, tconf(1), unlabeled, f.val), TrainingError);
}

TEST(Pipeline, AggregationMustMatchTheModel) {
  PipelineConfig p;
  p.model.in_dim = 4;
  p.model.classes = 3;
  p.model.hidden = 8;
  p.model.arch = models::Arch::kBaseCnn;
  p.agg = Aggregation::kInput;
  EXPECT_THROW(p.check(), ConfigError);
  p.agg = Aggregation::kOutput;
  EXPECT_NO_THROW(p.check());
  p.model.arch = models::Arch::kGraphUnet;
  EXPECT_THROW(p.check(), ConfigError);
  EXPECT_THROW(parse_aggregation("pixel"), ConfigError);
}

TEST(Pipeline, TextRoundTrip) {
  PipelineConfig p;
  p.seg = SegmentationConfig::for_mmu(20, 0.123456789012345);
  p.agg = Aggregation::kOutput;
  p.external_features = true;
  p.model.arch = models::Arch::kBaseCnn;
  p.model.op = models::ConvKind::kSage;
  p.model.in_dim = 7;
  p.model.hidden = 16;
  p.model.classes = 9;
  p.model.heads = 2;
  p.model.resize = true;
  p.model.resize_to = 32;
  const auto q = PipelineConfig::from_text(p.to_text());
  EXPECT_EQ(q.to_text(), p.to_text());
  EXPECT_EQ(q.seg.k, p.seg.k);
  EXPECT_EQ(q.model, p.model);
  EXPECT_THROW(PipelineConfig::from_text("seg.mode=fh\n"), ValidationError);
  EXPECT_THROW(PipelineConfig::from_text("seg.mode=slic\n"), ValidationError);
}

TEST(Pipeline, PrepareMapsLabelsToPixels) {
  synth::SynthConfig sc;
  sc.height = 16;
  sc.width = 18;
  sc.channels = 3;
  sc.labels_per_patch = 3;
  const auto data = synth::synth_dataset(sc, 1).dataset;
  PipelineConfig p;
  p.seg = SegmentationConfig::for_mmu(1);
  p.model.arch = models::Arch::kBaseMlp;
  const auto& s = data.samples[0];
  const auto prep = prepare(p, s.image, s.image, s.labels);
  ASSERT_EQ(prep.label_px.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(prep.label_px[l], std::uint32_t{s.labels.points[l].row} * 18 + s.labels.points[l].col);
    EXPECT_EQ(prep.label_cls[l], s.labels.points[l].cls);
  }
  EXPECT_EQ(prep.x.rows(), 16u * 18u);
  EXPECT_EQ(prep.graph.num_nodes, 16u * 18u);
  Raster wrong = s.image;
  wrong.width = 17;
  EXPECT_THROW(prepare(p, s.image, wrong, s.labels), ValidationError);
}

}  // namespace
}  // namespace lcslab::train
