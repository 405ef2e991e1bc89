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

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "lcslab/ad/tape.hpp"
#include "lcslab/core/binary_io.hpp"

namespace lcslab::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Named model parameters with Adam moments.
///
/// Non-trainable entries (batch-norm running statistics) live in the same
/// store so that a checkpoint captures the full model state.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    Matrix<T> value;
    Matrix<T> m;
    Matrix<T> v;
    bool trainable = true;
  };

  void add(const std::string& name, Matrix<T> value, bool trainable = true) {
    if (params_.count(name)) throw ValidationError("duplicate parameter name " + name);
    Entry e;
    e.m = Matrix<T>(value.rows(), value.cols());
    e.v = Matrix<T>(value.rows(), value.cols());
    e.value = std::move(value);
    e.trainable = trainable;
    params_.emplace(name, std::move(e));
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Matrix<T>& value(const std::string& name) { return entry(name).value; }
  const Matrix<T>& value(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ValidationError("unknown parameter " + name);
    return it->second.value;
  }

  Entry& entry(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ValidationError("unknown parameter " + name);
    return it->second;
  }

  const std::map<std::string, Entry>& entries() const { return params_; }
  std::map<std::string, Entry>& entries() { return params_; }
  std::uint64_t step() const { return step_; }
  std::size_t size() const { return params_.size(); }

  /// One Adam update with bias correction; the step count advances once for
  /// the whole store. Missing gradients count as zero.
  void adam_step(const std::map<std::string, Matrix<T>>& grads, const AdamConfig& cfg) {
    for (const auto& [name, g] : grads) {
      auto it = params_.find(name);
      if (it == params_.end()) throw ValidationError("gradient for unknown parameter " + name);
      if (!g.same_shape(it->second.value)) {
        throw ValidationError("gradient shape mismatch for " + name);
      }
      for (T x : g.values()) {
        if (!std::isfinite(x)) throw TrainingError("non-finite gradient for parameter " + name);
      }
    }
    ++step_;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (auto& [name, e] : params_) {
      if (!e.trainable) continue;
      auto it = grads.find(name);
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        const double g = it == grads.end() ? 0.0 : static_cast<double>(it->second[i]);
        const double m = b1 * e.m[i] + (1.0 - b1) * g;
        const double v = b2 * e.v[i] + (1.0 - b2) * g * g;
        e.m[i] = static_cast<T>(m);
        e.v[i] = static_cast<T>(v);
        const double update = cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
        e.value[i] = static_cast<T>(e.value[i] - update);
      }
    }
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, e] : params_) out.add(name, e.value.template cast<U>(), e.trainable);
    return out;
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.params_.size() != b.params_.size()) return false;
    for (const auto& [name, e] : a.params_) {
      auto it = b.params_.find(name);
      if (it == b.params_.end() || !(it->second.value == e.value) ||
          it->second.trainable != e.trainable) {
        return false;
      }
    }
    return true;
  }

 private:
  std::map<std::string, Entry> params_;
  std::uint64_t step_ = 0;
};

/// Binds store entries onto a tape. Trainable entries become differentiable
/// leaves when `with_grad` is set; everything else is a constant.
template <typename T>
class ParamBinder {
 public:
  ParamBinder(Tape<T>& tape, ParamStore<T>& store, bool with_grad)
      : tape_(&tape), store_(&store), with_grad_(with_grad) {}

  Var<T> operator()(const std::string& name) {
    if (auto it = bound_.find(name); it != bound_.end()) return it->second;
    auto& e = store_->entry(name);
    Var<T> v = (with_grad_ && e.trainable) ? tape_->variable(e.value) : tape_->constant(e.value);
    bound_.emplace(name, v);
    return v;
  }

  /// Binds `name` to an existing tape value instead of a store entry.
  void bind(const std::string& name, Var<T> v) {
    if (v.tape != tape_) throw ValidationError("cannot bind " + name + " from another tape");
    bound_[name] = v;
  }

  /// Direct access for in-place state such as running statistics.
  Matrix<T>& buffer(const std::string& name) { return store_->value(name); }

  Tape<T>& tape() { return *tape_; }
  ParamStore<T>& store() { return *store_; }
  bool with_grad() const { return with_grad_; }

  /// Gradients of every bound trainable parameter.
  std::map<std::string, Matrix<T>> gradients() const {
    std::map<std::string, Matrix<T>> out;
    for (const auto& [name, v] : bound_) {
      if (tape_->requires_grad(v)) out.emplace(name, tape_->grad(v));
    }
    return out;
  }

 private:
  Tape<T>* tape_;
  ParamStore<T>* store_;
  bool with_grad_;
  std::map<std::string, Var<T>> bound_;
};

// Checkpoint archive (little-endian):
//   magic "LCSP" | version u32 (=1) | config length u32 | config bytes (UTF-8 text)
//   | entry count u32 | per entry: name length u16, name bytes, trainable u8,
//   rows u32, cols u32, rows*cols float32 values
inline constexpr char kCheckpointMagic[4] = {'L', 'C', 'S', 'P'};

struct Checkpoint {
  std::string config;
  ParamStore<float> params;
};

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const ParamStore<T>& store, const std::string& config) {
  io::ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(config.size()));
  w.bytes(config);
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, e] : store.entries()) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
    w.u8(e.trainable ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(e.value.rows()));
    w.u32(static_cast<std::uint32_t>(e.value.cols()));
    for (T v : e.value.values()) w.f32(static_cast<float>(v));
  }
  return w.buffer();
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& store,
                     const std::string& config) {
  io::write_file(path, encode_checkpoint(store, config));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  if (r.remaining() < 4 || r.bytes(4) != std::string_view(kCheckpointMagic, 4)) {
    throw FormatError(path.string() + " is not a checkpoint (bad magic)");
  }
  if (r.u32() != 1) throw FormatError("unsupported checkpoint version in " + path.string());
  Checkpoint ck;
  ck.config = r.bytes(r.u32());
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.bytes(r.u16());
    const bool trainable = r.u8() != 0;
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    Matrix<float> m(rows, cols);
    for (auto& v : m.values()) v = r.f32();
    ck.params.add(name, std::move(m), trainable);
  }
  return ck;
}

/// Copies checkpoint values into a freshly initialized store, requiring the
/// same parameter names and shapes.
template <typename T>
void restore(ParamStore<T>& store, const ParamStore<float>& saved) {
  if (saved.size() != store.size()) {
    throw ValidationError("checkpoint has " + std::to_string(saved.size()) +
                          " parameters, model expects " + std::to_string(store.size()));
  }
  for (auto& [name, e] : store.entries()) {
    if (!saved.contains(name)) throw ValidationError("checkpoint lacks parameter " + name);
    const auto& v = saved.value(name);
    if (v.rows() != e.value.rows() || v.cols() != e.value.cols()) {
      throw ValidationError("checkpoint shape mismatch for " + name + ": " + shape_str(v) +
                            " vs " + shape_str(e.value));
    }
    e.value = v.template cast<T>();
  }
}

}  // namespace lcslab::ad
