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

// lcslab command-line runner.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "lcslab/lcslab.hpp"

namespace fs = std::filesystem;
using namespace lcslab;

namespace {

struct Flags {
  std::string dataset, out, features, manifest, checkpoint, pred, split = "all";
  std::string mode = "fh", arch = "basegnn", op = "gcn", agg, fraction = "1";
  std::uint32_t amin = 10, hidden = 64, heads = 4, resize = 0, border = kBorder;
  double k = 0.5, lr = 1e-4;
  std::uint32_t epochs = 20, batch = 8, repeats = 3;
  std::uint64_t seed = 0;
  int tolerance = 0;
  // sweep
  std::string models = "basemlp,basegnn:gcn,basegnn:sage,basegnn:gat,basegnn:gt,gunet:gcn,basecnn";
  std::string mmus = "1,5,10,20,40";
  std::string fractions = "1,1/2,1/4,1/8,1/16";
  unsigned jobs = 0;
  // synth
  std::uint32_t count = 100, classes = 5, size = 64, channels = 4, blobs = 12, labels = 1;
  std::uint32_t group_size = 4;
  float sigma = 0.05f;
  double val = 0.1, test = 0.1;
};

void add_pipeline_flags(CLI::App* c, Flags& f) {
  c->add_option("--mode", f.mode, "Object definition")->check(CLI::IsMember({"trivial", "fh"}));
  c->add_option("--amin", f.amin, "Minimum segment size A_min (pixels)")->check(CLI::PositiveNumber);
  c->add_option("--k", f.k, "FH scale parameter")->check(CLI::PositiveNumber);
}

void add_model_flags(CLI::App* c, Flags& f) {
  c->add_option("--arch", f.arch, "Architecture")
      ->check(CLI::IsMember({"basemlp", "basegnn", "gunet", "basecnn"}));
  c->add_option("--op", f.op, "Graph operator")->check(CLI::IsMember({"gcn", "sage", "gat", "gt"}));
  c->add_option("--agg", f.agg, "Aggregation level (default: input for graph models, output for basecnn)")
      ->check(CLI::IsMember({"input", "output"}));
  c->add_option("--hidden", f.hidden, "Hidden width");
  c->add_option("--heads", f.heads, "Attention heads (gat, gt)");
  c->add_option("--resize", f.resize, "basecnn: bilinear upscale side length, 0 = off");
}

void add_train_flags(CLI::App* c, Flags& f) {
  c->add_option("--epochs", f.epochs, "Training epochs");
  c->add_option("--lr", f.lr, "Initial learning rate");
  c->add_option("--batch", f.batch, "Patches per minibatch");
  c->add_option("--seed", f.seed, "Base seed");
  c->add_option("--repeats", f.repeats, "Seeded repeats (seed, seed+1, ...)");
  c->add_option("--fraction", f.fraction, "Training subset {1,1/2,1/4,1/8,1/16}");
  c->add_option("--tolerance", f.tolerance, "Tolerance of the accuracy printed to stdout")
      ->check(CLI::IsMember({0, 1}));
  c->add_option("--border", f.border, "Excluded border width for metrics");
}

void add_data_flags(CLI::App* c, Flags& f, bool features) {
  c->add_option("--dataset", f.dataset, "LCSB dataset file")->required();
  c->add_option("--manifest", f.manifest, "Manifest of 'index split group' lines");
  if (features) c->add_option("--features", f.features, "Directory holding features.lcsb");
}

SegmentationConfig segmentation(const Flags& f) {
  SegmentationConfig s;
  s.mode = f.mode == "fh" ? SegmentationMode::kFh : SegmentationMode::kTrivial;
  s.min_size = f.mode == "fh" ? f.amin : 1;
  s.k = f.k;
  return s;
}

experiment::ExperimentConfig experiment_config(const Flags& f) {
  experiment::ExperimentConfig c;
  c.dataset = f.dataset;
  c.out = f.out;
  c.features = f.features;
  c.manifest = f.manifest;
  c.pipeline.seg = segmentation(f);
  c.pipeline.model.arch = models::parse_arch(f.arch);
  c.pipeline.model.op = models::parse_conv(f.op);
  c.pipeline.model.hidden = f.hidden;
  c.pipeline.model.heads = f.heads;
  c.pipeline.model.resize = f.resize > 0;
  if (f.resize > 0) c.pipeline.model.resize_to = f.resize;
  const bool graph = c.pipeline.model.is_graph();
  c.pipeline.agg = f.agg.empty() ? (graph ? train::Aggregation::kInput : train::Aggregation::kOutput)
                                 : train::parse_aggregation(f.agg);
  c.train.epochs = f.epochs;
  c.train.lr = f.lr;
  c.train.batch = f.batch;
  c.train.seed = f.seed;
  c.train.repeats = f.repeats;
  c.train.check();
  c.metrics.border = f.border;
  c.fraction = Fraction::parse(f.fraction);
  return c;
}

std::optional<Split> parse_split(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& text, T (*conv)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(conv(item));
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

void print_report(const metrics::MetricsReport& r, int tolerance) {
  std::printf("oa_t%d=%.6f f1_t%d=%.6f patch_density=%.4f edge_density=%.4f entropy=%.6f\n",
              tolerance, tolerance ? r.oa_t1 : r.oa_t0, tolerance, tolerance ? r.f1_t1 : r.f1_t0,
              r.patch_density, r.edge_density, r.entropy);
}

std::string sample_name(const char* stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu", stem, i);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-based land-cover classification under sparse point labels"};
  app.set_config("--config", "", "Key-value config file ([section] or section.key entries)");
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  synth->add_option("--out", f.out, "Output directory")->required();
  synth->add_option("--count", f.count, "Number of patches");
  synth->add_option("--classes", f.classes, "Class count K");
  synth->add_option("--size", f.size, "Patch side length");
  synth->add_option("--channels", f.channels, "Channel count");
  synth->add_option("--blobs", f.blobs, "Voronoi sites per patch");
  synth->add_option("--sigma", f.sigma, "Gaussian noise sigma");
  synth->add_option("--labels", f.labels, "Point labels per patch");
  synth->add_option("--group-size", f.group_size, "Consecutive patches per group");
  synth->add_option("--val", f.val, "Validation fraction of groups");
  synth->add_option("--test", f.test, "Test fraction of groups");
  synth->add_option("--seed", f.seed, "Seed");

  auto* seg = app.add_subcommand("segment", "Write the segment map of every sample");
  add_data_flags(seg, f, false);
  seg->add_option("--out", f.out, "Output directory")->required();
  add_pipeline_flags(seg, f);

  auto* graph = app.add_subcommand("graph", "Write the object graph of every sample");
  add_data_flags(graph, f, true);
  graph->add_option("--out", f.out, "Output directory")->required();
  add_pipeline_flags(graph, f);

  auto* trn = app.add_subcommand("train", "Train, write checkpoints, logs and metrics");
  add_data_flags(trn, f, true);
  trn->add_option("--out", f.out, "Output directory")->required();
  add_pipeline_flags(trn, f);
  add_model_flags(trn, f);
  add_train_flags(trn, f);

  auto* pred = app.add_subcommand("predict", "Predict class maps with a checkpoint");
  add_data_flags(pred, f, true);
  pred->add_option("--checkpoint", f.checkpoint, "Checkpoint file")->required();
  pred->add_option("--out", f.out, "Output class raster file")->required();
  pred->add_option("--split", f.split, "Split to predict")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));

  auto* eval = app.add_subcommand("eval", "Score predicted class maps against point labels");
  eval->add_option("--pred", f.pred, "Class raster file written by predict")->required();
  eval->add_option("--dataset", f.dataset, "Dataset supplying labels (default: the file's own)");
  eval->add_option("--out", f.out, "Metrics CSV file")->required();
  eval->add_option("--split", f.split, "Split to score")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  eval->add_option("--tolerance", f.tolerance, "Tolerance of the accuracy printed to stdout")
      ->check(CLI::IsMember({0, 1}));
  eval->add_option("--border", f.border, "Excluded border width");

  auto* sweep = app.add_subcommand("sweep", "Run the model x fraction x MMU grid");
  add_data_flags(sweep, f, true);
  sweep->add_option("--out", f.out, "Output directory")->required();
  sweep->add_option("--k", f.k, "FH scale parameter")->check(CLI::PositiveNumber);
  sweep->add_option("--models", f.models, "Comma list of arch[:op]");
  sweep->add_option("--mmus", f.mmus, "Comma list of MMUs (1 = pixel objects)");
  sweep->add_option("--fractions", f.fractions, "Comma list of training fractions");
  sweep->add_option("--jobs", f.jobs, "Worker threads (0 = hardware concurrency)");
  sweep->add_option("--hidden", f.hidden, "Hidden width");
  sweep->add_option("--heads", f.heads, "Attention heads (gat, gt)");
  add_train_flags(sweep, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (synth->parsed()) {
      synth::SynthConfig sc;
      sc.classes = static_cast<std::uint16_t>(f.classes);
      sc.height = sc.width = static_cast<std::uint16_t>(f.size);
      sc.channels = static_cast<std::uint16_t>(f.channels);
      sc.blobs = f.blobs;
      sc.sigma = f.sigma;
      sc.labels_per_patch = f.labels;
      sc.seed = f.seed;
      synth::SplitPlan plan;
      plan.val_fraction = f.val;
      plan.test_fraction = f.test;
      plan.group_size = f.group_size;
      auto ds = synth::synth_dataset(sc, f.count, plan);
      fs::create_directories(f.out);
      write_dataset(ds.dataset, fs::path(f.out) / "dataset.lcsb");
      write_truth(ds.truth, fs::path(f.out) / "truth.lcsb");
      std::printf("wrote %zu samples to %s\n", ds.dataset.samples.size(), f.out.c_str());
    } else if (seg->parsed() || graph->parsed()) {
      auto cfg = experiment_config(f);
      const auto in = experiment::load_inputs(cfg);
      fs::create_directories(f.out);
      const bool var_geom = default_var_geom(cfg.pipeline.seg.mmu(), !in.features.has_value());
      for (std::size_t i = 0; i < in.data.samples.size(); ++i) {
        const auto sm = segment(in.data.samples[i].image, cfg.pipeline.seg);
        if (seg->parsed()) {
          write_segment_map(sm, fs::path(f.out) / (sample_name("seg", i) + ".bin"));
        } else {
          auto g = build_rag(sm, node_features(in.features_of(i), sm, var_geom));
          write_graph_dump(g, fs::path(f.out) / sample_name("graph", i));
        }
      }
      std::printf("wrote %zu samples to %s\n", in.data.samples.size(), f.out.c_str());
    } else if (trn->parsed()) {
      const auto runs = experiment::run_train(experiment_config(f));
      for (const auto& r : runs) {
        std::printf("seed %llu best_epoch=%u val_oa=%.6f ", static_cast<unsigned long long>(r.key.seed),
                    r.trained.log.best_epoch, r.trained.log.best_val_oa);
        print_report(r.report, f.tolerance);
      }
    } else if (pred->parsed()) {
      auto cfg = experiment_config(f);
      const auto out = experiment::run_predict(f.checkpoint, cfg, parse_split(f.split));
      write_truth(out, f.out);
      std::printf("wrote %zu class maps to %s\n", out.maps.size(), f.out.c_str());
    } else if (eval->parsed()) {
      const auto preds = read_truth(f.pred);
      std::optional<Dataset> labels;
      if (!f.dataset.empty()) labels = read_dataset(f.dataset);
      metrics::MetricsConfig mc;
      mc.border = f.border;
      const auto report =
          experiment::run_eval(preds, labels ? &*labels : nullptr, parse_split(f.split), mc);
      experiment::RunKey key{"-", "-", "-", 0, "-", 0};
      io::write_text(f.out, experiment::report_header() + experiment::report_row(key, report));
      print_report(report, f.tolerance);
    } else if (sweep->parsed()) {
      experiment::SweepConfig sc;
      sc.base = experiment_config(f);
      sc.models = experiment::parse_models(f.models);
      sc.mmus = parse_list<std::uint32_t>(f.mmus, [](const std::string& s) {
        const unsigned long v = std::stoul(s);
        if (v < 1) throw ConfigError("MMU must be at least 1");
        return static_cast<std::uint32_t>(v);
      });
      sc.fractions = parse_list<Fraction>(f.fractions, [](const std::string& s) { return Fraction::parse(s); });
      sc.jobs = f.jobs ? f.jobs : std::max(1u, std::thread::hardware_concurrency());
      const auto runs = experiment::run_sweep(sc);
      std::printf("wrote %zu grid runs to %s\n", runs.size(), f.out.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::kIo);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: malformed number (%s)\n", e.what());
    return static_cast<int>(ExitCode::kUsage);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(ExitCode::kValidation);
  }
  return static_cast<int>(ExitCode::kOk);
}
