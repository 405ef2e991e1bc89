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

// Experiment runs: training repeats, evaluation reports and the sweep grid.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "lcslab/core/dataset.hpp"
#include "lcslab/core/subset.hpp"
#include "lcslab/metrics/metrics.hpp"
#include "lcslab/train/trainer.hpp"

namespace lcslab::experiment {

namespace fs = std::filesystem;
using train::Prepared;
using train::PipelineConfig;
using train::TrainConfig;

struct ExperimentConfig {
  fs::path dataset;
  fs::path out;
  fs::path features;  // directory holding features.lcsb; empty when unused
  fs::path manifest;
  PipelineConfig pipeline;
  TrainConfig train;
  metrics::MetricsConfig metrics;
  Fraction fraction;
};

inline constexpr const char* kFeatureFile = "features.lcsb";

struct Inputs {
  Dataset data;
  std::optional<Dataset> features;

  const Raster& features_of(std::size_t i) const {
    return features ? features->samples[i].image : data.samples[i].image;
  }
};

inline Inputs load_inputs(const ExperimentConfig& cfg) {
  Inputs in;
  in.data = read_dataset(cfg.dataset);
  if (!cfg.manifest.empty()) apply_manifest(in.data, cfg.manifest);
  if (!cfg.features.empty()) {
    in.features = read_dataset(cfg.features / kFeatureFile);
    if (in.features->samples.size() != in.data.samples.size() ||
        in.features->height != in.data.height || in.features->width != in.data.width) {
      throw ValidationError("feature maps do not align with the dataset samples");
    }
  }
  return in;
}

/// Fills in the model input width and the feature-source flag.
inline PipelineConfig resolve_pipeline(PipelineConfig p, const Inputs& in) {
  p.external_features = in.features.has_value();
  const std::uint32_t channels = in.features ? in.features->channels : in.data.channels;
  p.model.classes = in.data.classes;
  p.model.in_dim = p.input_dim(channels);
  p.check();
  return p;
}

inline std::vector<Prepared> prepare_indices(const PipelineConfig& p, const Inputs& in,
                                             const std::vector<std::size_t>& idx) {
  std::vector<Prepared> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    const auto& s = in.data.samples[i];
    out.push_back(train::prepare(p, s.image, in.features_of(i), s.labels));
  }
  return out;
}

struct Splits {
  std::vector<Prepared> train, val, eval;
  std::vector<std::size_t> eval_index;
};

/// Prepares the training subset and the validation and evaluation splits;
/// evaluation uses the test split, or validation when there is no test split.
inline Splits prepare_splits(const PipelineConfig& p, const Inputs& in, Fraction fraction,
                             std::uint64_t subset_seed) {
  Splits s;
  const auto train_idx = split_indices(in.data, Split::kTrain);
  std::vector<std::size_t> chosen;
  for (std::size_t k : hierarchical_subset(train_idx.size(), fraction, subset_seed)) {
    chosen.push_back(train_idx[k]);
  }
  const auto val_idx = split_indices(in.data, Split::kVal);
  auto test_idx = split_indices(in.data, Split::kTest);
  if (test_idx.empty()) test_idx = val_idx;
  s.train = prepare_indices(p, in, chosen);
  s.val = prepare_indices(p, in, val_idx);
  s.eval = prepare_indices(p, in, test_idx);
  s.eval_index = test_idx;
  return s;
}

struct RunKey {
  std::string model;
  std::string op;
  std::string agg;
  std::uint32_t mmu = 1;
  std::string fraction;
  std::uint64_t seed = 0;
};

inline RunKey key_of(const PipelineConfig& p, const Fraction& f, std::uint64_t seed) {
  const bool attn_or_graph = p.model.arch == models::Arch::kBaseGnn ||
                             p.model.arch == models::Arch::kGraphUnet;
  return {models::arch_name(p.model.arch), attn_or_graph ? models::conv_name(p.model.op) : "-",
          train::aggregation_name(p.agg), p.seg.mmu(), f.str(), seed};
}

struct RunResult {
  RunKey key;
  train::TrainResult trained;
  metrics::MetricsReport report;
  std::vector<ClassMap> predictions;
};

inline metrics::MetricsReport evaluate(const PipelineConfig& p, ad::ParamStore<float>& params,
                                       const std::vector<Prepared>& samples, const Inputs& in,
                                       const std::vector<std::size_t>& index,
                                       const metrics::MetricsConfig& mc,
                                       std::vector<ClassMap>* predictions = nullptr) {
  std::vector<ClassMap> preds;
  std::vector<SparseLabelSet> labels;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    preds.push_back(train::predict(p, params, samples[i]));
    labels.push_back(in.data.samples[index[i]].labels);
  }
  auto report = metrics::evaluate_report(preds, labels, in.data.classes, mc);
  if (predictions) *predictions = std::move(preds);
  return report;
}

inline RunResult run_once(const PipelineConfig& p, const TrainConfig& tc, const Splits& splits,
                          const Inputs& in, const metrics::MetricsConfig& mc, const Fraction& f) {
  RunResult r;
  r.key = key_of(p, f, tc.seed);
  r.trained = train::train_model(p, tc, splits.train, splits.val);
  r.report = evaluate(p, r.trained.params, splits.eval, in, splits.eval_index, mc, &r.predictions);
  return r;
}

// ---- CSV output ----------------------------------------------------------------

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline constexpr const char* kMetricColumns[] = {"oa_t0", "oa_t1", "f1_t0", "f1_t1",
                                                 "patch_density", "edge_density",
                                                 "edge_proportion", "entropy"};

inline std::vector<double> metric_values(const metrics::MetricsReport& r) {
  return {r.oa_t0, r.oa_t1, r.f1_t0, r.f1_t1, r.patch_density, r.edge_density, r.edge_proportion,
          r.entropy};
}

inline std::string report_header() {
  std::string h = "model,operator,agg,mmu,fraction,seed";
  for (const char* c : kMetricColumns) h += std::string(",") + c;
  return h + ",samples,labels\n";
}

inline std::string report_row(const RunKey& k, const metrics::MetricsReport& r) {
  std::ostringstream s;
  s << k.model << ',' << k.op << ',' << k.agg << ',' << k.mmu << ',' << k.fraction << ',' << k.seed;
  for (double v : metric_values(r)) s << ',' << fmt(v);
  s << ',' << r.samples << ',' << r.labels << '\n';
  return s.str();
}

/// Mean and population standard deviation over seeds for each configuration,
/// in order of first appearance.
inline std::string summary_csv(const std::vector<RunResult>& runs) {
  using Group = std::tuple<std::string, std::string, std::string, std::uint32_t, std::string>;
  std::vector<Group> order;
  std::map<Group, std::vector<const RunResult*>> groups;
  for (const auto& r : runs) {
    Group g{r.key.model, r.key.op, r.key.agg, r.key.mmu, r.key.fraction};
    if (!groups.count(g)) order.push_back(g);
    groups[g].push_back(&r);
  }
  std::string out = "model,operator,agg,mmu,fraction,runs";
  for (const char* c : kMetricColumns) out += std::string(",") + c + "_mean," + c + "_std";
  out += '\n';
  for (const auto& g : order) {
    const auto& members = groups[g];
    std::ostringstream s;
    s << std::get<0>(g) << ',' << std::get<1>(g) << ',' << std::get<2>(g) << ',' << std::get<3>(g)
      << ',' << std::get<4>(g) << ',' << members.size();
    const std::size_t m = std::size(kMetricColumns);
    for (std::size_t c = 0; c < m; ++c) {
      double mean = 0.0;
      for (const auto* r : members) mean += metric_values(r->report)[c];
      mean /= static_cast<double>(members.size());
      double var = 0.0;
      for (const auto* r : members) {
        const double d = metric_values(r->report)[c] - mean;
        var += d * d;
      }
      var /= static_cast<double>(members.size());
      s << ',' << fmt(mean) << ',' << fmt(std::sqrt(var));
    }
    out += s.str() + '\n';
  }
  return out;
}

// ---- train command -----------------------------------------------------------

inline fs::path checkpoint_path(const fs::path& out, std::uint64_t seed) {
  return out / ("checkpoint_seed" + std::to_string(seed) + ".lcsp");
}

/// Trains `repeats` models with seeds seed, seed + 1, ... and writes a
/// checkpoint and training log per seed plus metrics.csv and
/// metrics_summary.csv.
inline std::vector<RunResult> run_train(const ExperimentConfig& cfg) {
  const Inputs in = load_inputs(cfg);
  const PipelineConfig p = resolve_pipeline(cfg.pipeline, in);
  const Splits splits = prepare_splits(p, in, cfg.fraction, cfg.train.seed);
  fs::create_directories(cfg.out);
  std::vector<RunResult> runs;
  std::string csv = report_header();
  for (std::uint32_t r = 0; r < cfg.train.repeats; ++r) {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.train.seed + r;
    auto run = run_once(p, tc, splits, in, cfg.metrics, cfg.fraction);
    ad::save_checkpoint(checkpoint_path(cfg.out, tc.seed), run.trained.params, p.to_text());
    io::write_text(cfg.out / ("trainlog_seed" + std::to_string(tc.seed) + ".csv"),
                   run.trained.log.to_csv());
    csv += report_row(run.key, run.report);
    runs.push_back(std::move(run));
  }
  io::write_text(cfg.out / "metrics.csv", csv);
  io::write_text(cfg.out / "metrics_summary.csv", summary_csv(runs));
  return runs;
}

// ---- predict / eval ----------------------------------------------------------

/// Predicts every sample (or one split) with a checkpoint; the result is a
/// class raster file whose trailers carry each sample's split, group and labels.
inline TruthSet run_predict(const fs::path& checkpoint, const ExperimentConfig& cfg,
                            std::optional<Split> only) {
  auto ck = ad::load_checkpoint(checkpoint);
  PipelineConfig p = PipelineConfig::from_text(ck.config);
  const Inputs in = load_inputs(cfg);
  if (p.external_features != in.features.has_value()) {
    throw ValidationError("checkpoint and --features disagree on the input source");
  }
  const PipelineConfig expected = resolve_pipeline(p, in);
  if (!(expected.model == p.model)) {
    throw ValidationError("checkpoint model does not fit this dataset (input width or classes)");
  }
  auto params = models::init_model<float>(p.model, 0);
  ad::restore(params, ck.params);
  TruthSet out;
  out.classes = in.data.classes;
  out.height = in.data.height;
  out.width = in.data.width;
  for (std::size_t i = 0; i < in.data.samples.size(); ++i) {
    const auto& s = in.data.samples[i];
    if (only && s.split != *only) continue;
    const auto prepared = train::prepare(p, s.image, in.features_of(i), s.labels);
    out.maps.push_back(train::predict(p, params, prepared));
    Sample meta;
    meta.split = s.split;
    meta.group = s.group;
    meta.labels = s.labels;
    out.meta.push_back(std::move(meta));
  }
  return out;
}

/// Scores a prediction file against labels (its own trailers, or a dataset's).
inline metrics::MetricsReport run_eval(const TruthSet& preds, const Dataset* labels,
                                       std::optional<Split> only,
                                       const metrics::MetricsConfig& mc) {
  std::vector<ClassMap> maps;
  std::vector<SparseLabelSet> sets;
  if (labels && labels->samples.size() != preds.maps.size()) {
    throw ValidationError("prediction file holds " + std::to_string(preds.maps.size()) +
                          " maps but the dataset has " + std::to_string(labels->samples.size()) +
                          " samples");
  }
  for (std::size_t i = 0; i < preds.maps.size(); ++i) {
    const Sample& meta = labels ? labels->samples[i] : preds.meta[i];
    if (only && meta.split != *only) continue;
    maps.push_back(preds.maps[i]);
    sets.push_back(meta.labels);
  }
  return metrics::evaluate_report(maps, sets, preds.classes, mc);
}

// ---- sweep -------------------------------------------------------------------

struct ModelChoice {
  models::Arch arch = models::Arch::kBaseGnn;
  models::ConvKind op = models::ConvKind::kGcn;
};

/// Parses "basegnn:gt,basemlp,basecnn".
inline std::vector<ModelChoice> parse_models(const std::string& text) {
  std::vector<ModelChoice> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    ModelChoice m;
    const auto colon = item.find(':');
    m.arch = models::parse_arch(item.substr(0, colon));
    if (colon != std::string::npos) m.op = models::parse_conv(item.substr(colon + 1));
    out.push_back(m);
  }
  if (out.empty()) throw ConfigError("no models given for the sweep");
  return out;
}

struct SweepConfig {
  ExperimentConfig base;
  std::vector<ModelChoice> models;
  std::vector<std::uint32_t> mmus{1, 5, 10, 20, 40};
  std::vector<Fraction> fractions{{1}, {2}, {4}, {8}, {16}};
  unsigned jobs = 1;
};

inline SegmentationConfig segmentation_for_mmu(std::uint32_t mmu, double k) {
  if (mmu <= 1) return {SegmentationMode::kTrivial, 1, k};
  return SegmentationConfig::for_mmu(mmu, k);
}

inline std::string line_plot_svg(const std::string& title, const std::string& ylabel,
                                 const std::vector<std::uint32_t>& xs,
                                 const std::vector<std::pair<std::string, std::vector<double>>>& series);

/// Runs models x fractions x MMUs x repeats. Cells run on `jobs` worker
/// threads; results are reduced in grid order, so output files do not depend
/// on scheduling.
inline std::vector<RunResult> run_sweep(const SweepConfig& sc) {
  const Inputs in = load_inputs(sc.base);
  struct Cell {
    PipelineConfig pipeline;
    Fraction fraction;
    std::uint64_t seed;
    std::size_t prep;  // index into prepared inputs
  };
  std::vector<Cell> cells;
  std::vector<Splits> prepared;
  std::map<std::tuple<std::uint32_t, bool, std::uint32_t>, std::size_t> prep_index;
  for (const auto& m : sc.models) {
    for (const auto& f : sc.fractions) {
      for (std::uint32_t mmu : sc.mmus) {
        PipelineConfig p = sc.base.pipeline;
        p.model.arch = m.arch;
        p.model.op = m.op;
        p.agg = p.model.is_graph() ? train::Aggregation::kInput : train::Aggregation::kOutput;
        p.seg = segmentation_for_mmu(mmu, sc.base.pipeline.seg.k);
        p = resolve_pipeline(p, in);
        const auto key = std::make_tuple(mmu, p.model.is_graph(), f.denominator);
        if (!prep_index.count(key)) {
          prep_index[key] = prepared.size();
          prepared.push_back(prepare_splits(p, in, f, sc.base.train.seed));
        }
        for (std::uint32_t r = 0; r < sc.base.train.repeats; ++r) {
          cells.push_back({p, f, sc.base.train.seed + r, prep_index[key]});
        }
      }
    }
  }

  std::vector<std::optional<RunResult>> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cells.size();) {
      try {
        TrainConfig tc = sc.base.train;
        tc.seed = cells[i].seed;
        results[i] = run_once(cells[i].pipeline, tc, prepared[cells[i].prep], in,
                              sc.base.metrics, cells[i].fraction);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(sc.jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> threads;
  for (unsigned j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<RunResult> runs;
  std::string csv = report_header();
  for (auto& r : results) {
    csv += report_row(r->key, r->report);
    runs.push_back(std::move(*r));
  }
  fs::create_directories(sc.base.out);
  io::write_text(sc.base.out / "summary.csv", csv);
  io::write_text(sc.base.out / "summary_mean_std.csv", summary_csv(runs));

  // One line per (model, operator, fraction): mean over seeds against MMU.
  std::vector<std::pair<std::string, std::vector<double>>> acc, density;
  for (const auto& m : sc.models) {
    for (const auto& f : sc.fractions) {
      std::vector<double> a, d;
      std::string label;
      for (std::uint32_t mmu : sc.mmus) {
        double sa = 0, sd = 0;
        int n = 0;
        for (const auto& r : runs) {
          if (r.key.model == models::arch_name(m.arch) && r.key.mmu == mmu &&
              r.key.fraction == f.str() &&
              (r.key.op == "-" || r.key.op == models::conv_name(m.op))) {
            sa += r.report.oa_t0;
            sd += r.report.patch_density;
            ++n;
            label = r.key.model + (r.key.op == "-" ? "" : "+" + r.key.op) + " f=" + r.key.fraction;
          }
        }
        a.push_back(n ? sa / n : 0.0);
        d.push_back(n ? sd / n : 0.0);
      }
      acc.emplace_back(label, a);
      density.emplace_back(label, d);
    }
  }
  io::write_text(sc.base.out / "accuracy_vs_mmu.svg",
                 line_plot_svg("Overall accuracy (t=0) vs MMU", "OA", sc.mmus, acc));
  io::write_text(sc.base.out / "patch_density_vs_mmu.svg",
                 line_plot_svg("Patch density vs MMU", "regions per patch", sc.mmus, density));
  return runs;
}

/// Minimal static SVG line chart; x positions are evenly spaced categories.
inline std::string line_plot_svg(const std::string& title, const std::string& ylabel,
                                 const std::vector<std::uint32_t>& xs,
                                 const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const double W = 640, H = 420, left = 70, right = 190, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& [name, ys] : series) {
    for (double y : ys) {
      lo = first ? y : std::min(lo, y);
      hi = first ? y : std::max(hi, y);
      first = false;
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto px = [&](std::size_t i) {
    return left + (xs.size() <= 1 ? pw / 2 : pw * static_cast<double>(i) / (xs.size() - 1));
  };
  auto py = [&](double y) { return top + ph * (1.0 - (y - lo) / (hi - lo)); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << left << "\" y=\"22\" font-size=\"15\">" << title << "</text>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
    << top + ph << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s << "<text x=\"" << px(i) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
      << xs[i] << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double y = lo + (hi - lo) * t / 4.0;
    s << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
      << fmt(std::round(y * 1000.0) / 1000.0) << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\">MMU (pixels)</text>\n"
    << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
    << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = colors[k % std::size(colors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[k].second.size(); ++i) {
      s << px(i) << ',' << py(series[k].second[i]) << ' ';
    }
    s << "\"/>\n";
    for (std::size_t i = 0; i < series[k].second.size(); ++i) {
      s << "<circle cx=\"" << px(i) << "\" cy=\"" << py(series[k].second[i])
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 14 + 16.0 * k;
    s << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30
      << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly << "\">" << series[k].first
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace lcslab::experiment
