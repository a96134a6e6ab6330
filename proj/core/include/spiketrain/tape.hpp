// Copyright 2026 The Spiketrain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <vector>

#include "spiketrain/tensor.hpp"

namespace spiketrain {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode differentiation tape over the time-unrolled computation
/// graph. Nodes are recorded in execution order; backward() walks them in
/// exact reverse order and accumulates adjoints additively, each in a fixed
/// deterministic order, so two runs of the same program produce bit-identical
/// gradients.
///
/// A tape is rebuilt for every forward pass (the unrolled length T varies
/// between runs), so there is no persistent-graph bookkeeping.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input node. Parameters are leaves whose gradients callers read back.
  Var leaf(Tensor value, bool is_param = false);

  // ---- elementwise ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var square(Var a);

  /// Elementwise node with caller-supplied forward and local gradient.
  /// grad_fn(x, y) returns dy/dx given input x and forward output y; this is
  /// the seam the spike function and its surrogate pair plug into.
  Var custom_unary(Var a, const std::function<double(double)>& forward_fn,
                   const std::function<double(double, double)>& grad_fn);

  /// Forward copy that blocks gradient flow.
  Var detach(Var a);

  // ---- shape ----
  Var reshape(Var a, std::vector<index_t> shape);
  /// Expands axes of extent 1 to the target shape (same rank).
  Var broadcast(Var a, std::vector<index_t> shape);
  Var reduce_sum(Var a, std::vector<int> axes, bool keepdims);
  Var reduce_mean(Var a, std::vector<int> axes, bool keepdims);
  /// Concatenate along axis 0.
  Var concat0(const std::vector<Var>& parts);
  /// Split into `parts` equal chunks along axis 0.
  std::vector<Var> split0(Var a, index_t parts);

  // ---- linear algebra ----
  /// (m,k) x (k,n) -> (m,n)
  Var matmul(Var a, Var b);
  /// x: (N,C,H,W), w: (F,C,kh,kw), stride 1, zero padding `pad` -> (N,F,Ho,Wo)
  Var conv2d(Var x, Var w, int pad);
  /// Non-overlapping k x k window average, stride k, floor boundary.
  Var avg_pool(Var x, int k);

  /// Mean over the batch of softmax cross-entropy rows; logits (N,K),
  /// one label per row. Log-sum-exp stabilized.
  Var softmax_cross_entropy(Var logits, std::vector<int> labels);

  // ---- access ----
  const Tensor& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from `output` seeded with `seed` (shape must match the
  /// output). Clears previous adjoints. An empty tape is a no-op.
  void backward(Var output, const Tensor& seed);
  /// Scalar convenience: seed 1.
  void backward(Var output);

  /// Adjoint of a node, or nullptr if backward never touched it.
  const Tensor* grad_ptr(Var v) const;
  /// Adjoint of a node; zeros of the node's shape if untouched.
  Tensor grad(Var v) const;

 private:
  struct Node {
    Tensor value;
    Tensor adjoint;                    // lazily allocated
    std::vector<int> inputs;
    std::function<void(Tape&, int)> backward;  // pull self adjoint, push to inputs
    bool is_param = false;
  };

  Var record(Tensor value, std::vector<int> inputs,
             std::function<void(Tape&, int)> backward_fn);
  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& adjoint_of(int id);

  std::vector<Node> nodes_;

  friend struct TapeAccess;
};

}  // namespace spiketrain
