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

// Tape-based reverse-mode differentiation.
//
// Nodes are appended in evaluation order, which is a topological order of the
// computation DAG. backward() walks the tape once from the root towards the
// leaves, so every node is visited exactly once and gradients accumulate in a
// fixed, reproducible order.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "lcslab/error.hpp"
#include "lcslab/matrix.hpp"

namespace lcslab::ad {

template <typename T>
class Tape;

/// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t id = 0;

  const Matrix<T>& value() const { return tape->value(*this); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

template <typename T>
class Tape {
 public:
  /// Propagates the node's output gradient into its inputs' gradients.
  using Backward = std::function<void(Tape&, const Matrix<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Matrix<T> value) { return push(std::move(value), false, nullptr); }
  Var<T> variable(Matrix<T> value) { return push(std::move(value), true, nullptr); }

  /// Records an op result. The backward closure is kept only when some input
  /// needs a gradient.
  Var<T> record(Matrix<T> value, std::initializer_list<Var<T>> inputs, Backward backward) {
    return record(std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  Var<T> record(Matrix<T> value, std::span<const Var<T>> inputs, Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) {
      if (in.tape != this) throw ValidationError("op input recorded on another tape");
      needs = needs || nodes_[in.id].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  const Matrix<T>& value(Var<T> v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var<T> v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient buffer of v, allocated (zeroed) on first use; nullptr when v does
  /// not take part in differentiation.
  Matrix<T>* grad_buffer(Var<T> v) {
    auto& n = nodes_[v.id];
    if (!n.requires_grad) return nullptr;
    if (n.grad.size() != n.value.size()) n.grad = Matrix<T>(n.value.rows(), n.value.cols());
    return &n.grad;
  }

  /// Accumulated gradient of v (zeros if nothing flowed into it).
  Matrix<T> grad(Var<T> v) const {
    const auto& n = nodes_.at(v.id);
    if (n.grad.size() == n.value.size()) return n.grad;
    return Matrix<T>(n.value.rows(), n.value.cols());
  }

  /// Seeds d(root)/d(root) = 1 elementwise and runs the reverse sweep.
  void backward(Var<T> root) {
    if (root.tape != this) throw ValidationError("backward root belongs to another tape");
    Matrix<T>* seed = grad_buffer(root);
    if (seed == nullptr) return;
    seed->fill(T{1});
    for (std::uint32_t id = root.id + 1; id-- > 0;) {
      auto& n = nodes_[id];
      if (!n.backward || n.grad.size() != n.value.size()) continue;
      n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    Backward backward;
    bool requires_grad = false;
  };

  Var<T> push(Matrix<T> value, bool requires_grad, Backward backward) {
    nodes_.push_back({std::move(value), {}, std::move(backward), requires_grad});
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
};

}  // namespace lcslab::ad
