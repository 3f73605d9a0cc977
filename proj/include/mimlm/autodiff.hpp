// Copyright 2026 The mimlm Authors.
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

// Tape-based reverse-mode differentiation over dense tensors.
//
// A Graph records every operation of one forward pass in execution order, so
// the tape order is already a topological order and backward() is a single
// reverse sweep.  Parameters live outside the graph; backward() accumulates
// into their grad buffers.  A graph is discarded after use.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mimlm/rng.hpp"
#include "mimlm/tensor.hpp"

namespace mimlm::ad {

class Graph;

// Handle to a node of a Graph.  Cheap to copy; valid while its graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Real item() const;  // requires size()==1
  // Gradient of the last backward() root w.r.t. this node (empty if none).
  std::span<const Real> grad() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

enum class Mode { kTrain, kEval };

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  // With track_gradients=false nothing is kept for the backward pass.
  explicit Graph(bool track_gradients = true);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Read-only reference to an external tensor; no gradient.
  Var input(const Tensor& external);
  // Trainable reference; backward() accumulates into external.grad().
  Var parameter(Tensor& external);

  // Seeds d(root)/d(root) = 1 and propagates.  root must hold one element.
  void backward(Var root);

  // Reports the producing op when any recorded value is non-finite.
  void set_nan_guard(bool on) { nan_guard_ = on; }
  bool tracking() const { return track_; }
  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  // Gradient buffer of a node, zero-allocated on first use.
  std::span<Real> grad(std::size_t id);
  std::span<const Real> grad_view(std::size_t id) const {
    return nodes_[id].grad;
  }

  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn fn);

 private:
  struct Node {
    Tensor own;
    const Tensor* external = nullptr;
    Tensor* param = nullptr;
    std::vector<Real> grad;
    BackwardFn backward;
    const char* op = "";
    bool needs_grad = false;
  };

  bool track_;
  bool nan_guard_ = false;
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
// Elementwise binaries: equal shapes, or one operand with a single element.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var x);
Var scale(Var x, Real c);
Var add_scalar(Var x, Real c);
Var sigmoid(Var x);
Var tanh(Var x);
// log(1 + e^x)
Var softplus(Var x);
Var exp(Var x);
Var log(Var x);
Var square(Var x);

Var sum(Var x);
Var mean(Var x);
// [m x n] -> [m x 1]
Var row_sum(Var x);
// x[m x n] + bias[n] added to every row.
Var add_row(Var x, Var bias);
// x W + b
Var linear(Var x, Var weight, Var bias);
Var concat_cols(Var a, Var b);
// Rows of a where take_first[r] != 0, otherwise rows of b.
Var choose_rows(std::span<const char> take_first, Var a, Var b);

Var embedding_lookup(Var table, std::span<const std::int32_t> ids);
Var dropout(Var x, double rate, Mode mode, Rng& rng);
// Row-wise for rank 2, whole vector for rank 1.
Var log_softmax(Var x);
// [m x n] -> [m x 1], element idx[r] of row r.
Var pick(Var x, std::span<const std::int32_t> idx);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var x) { return neg(x); }

}  // namespace mimlm::ad
