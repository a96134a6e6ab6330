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

#include <vector>

#include "spiketrain/tape.hpp"
#include "spiketrain/tensor.hpp"

namespace spiketrain {

enum class ActivationMode {
  /// Binary threshold forward, triangular surrogate backward.
  kHeavisideTriangle,
  /// Smooth sigmoid(k * (u - v_th)) forward, exact derivative backward.
  kSigmoid,
};

/// Leaky integrate-and-fire dynamics:
///   u_pre  = tau * u + I
///   a      = activation(u_pre - v_th)    (threshold fires at equality)
///   u_next = u_pre * (1 - a)             (hard reset)
struct LifConfig {
  double tau = 0.5;
  double v_th = 1.0;
  double gamma_sg = 1.0;  // triangle half-width of the surrogate
  ActivationMode activation = ActivationMode::kHeavisideTriangle;
  double sigmoid_k = 1.0;
  /// When set, the reset factor (1 - a) is treated as a constant in backward
  /// instead of being differentiated through the activation.
  bool detach_reset = false;

  void validate() const;
};

/// Membrane potentials and last-step outputs for one layer.
struct NeuronState {
  Tensor u;
  Tensor a;
};

/// One plain-value integration step (no tape). The differentiable path in
/// lif_unroll follows the same arithmetic and is tested against this.
NeuronState lif_step(const NeuronState& state, const Tensor& input, const LifConfig& cfg);

/// Triangular surrogate (1/g^2) * max(0, g - |u_pre - v_th|), elementwise.
Tensor surrogate_grad(const Tensor& u_pre, const LifConfig& cfg);

/// sigmoid(k * (u_pre - v_th)), elementwise.
Tensor sigmoid_activation(const Tensor& u_pre, double k, double v_th = 1.0);

/// Differentiable spike nonlinearity a = activation(u_pre).
Var spike_activation(Tape& tape, Var u_pre, const LifConfig& cfg);

/// Unrolls the LIF recurrence over T steps. `stacked_input` holds the
/// pre-synaptic drive with time folded into the leading axis, t-major:
/// rows [t*n, (t+1)*n) belong to step t. Returns spikes in the same layout.
Var lif_unroll(Tape& tape, Var stacked_input, index_t steps, const LifConfig& cfg);

/// Output accumulator: the readout layer integrates pre-synaptic input with
/// no decay or firing, so the per-step output is the input itself.
struct ReadoutRecord {
  std::vector<Tensor> outputs;  // O(t)
  Tensor mean;                  // (1/T) sum_t O(t)
};

ReadoutRecord readout_accumulate(const std::vector<Tensor>& presynaptic);

}  // namespace spiketrain
