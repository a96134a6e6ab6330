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

#include <cstdint>
#include <string>
#include <vector>

#include "spiketrain/arch.hpp"
#include "spiketrain/lif.hpp"
#include "spiketrain/tape.hpp"
#include "spiketrain/tensor.hpp"

namespace spiketrain {

/// Batch normalization over batch, time and space jointly: statistics are
/// taken per channel across the whole time-stacked batch, which is what makes
/// the normalization valid when the unrolled length changes later.
struct TdbnParams {
  Tensor gamma;         // (C) scale; initialized to the firing threshold
  Tensor beta;          // (C) shift
  Tensor running_mean;  // (C)
  Tensor running_var;   // (C) biased estimator, matches eval normalization
  double eps = 1e-5;
  double momentum = 0.1;
};

struct ConvBlock {
  Tensor w;  // (F, C, k, k)
  Tensor b;  // (F)
  TdbnParams bn;
  bool folded = false;  // BN already merged into w/b; skip normalization
};

/// A stack of conv / pool layers with a linear readout head. Weights are
/// plain tensors; every forward pass binds them as fresh tape leaves.
struct Model {
  ArchSpec arch;
  LifConfig lif;
  index_t in_channels = 0;
  index_t in_h = 0;
  index_t in_w = 0;
  index_t num_classes = 0;
  std::vector<ConvBlock> convs;
  Tensor fc_w;  // (features, classes)
  Tensor fc_b;  // (classes)

  /// Fixed deterministic parameter order, matching forward()'s binding
  /// order. While normalization is active the conv bias is not a parameter
  /// (it would be erased by the mean subtraction); folding materializes it.
  template <class Fn>
  void for_each_param(Fn&& fn) {
    for (std::size_t i = 0; i < convs.size(); ++i) {
      const std::string p = "conv" + std::to_string(i);
      fn(p + ".w", convs[i].w);
      if (convs[i].folded) {
        fn(p + ".b", convs[i].b);
      } else {
        fn(p + ".bn.gamma", convs[i].bn.gamma);
        fn(p + ".bn.beta", convs[i].bn.beta);
      }
    }
    fn("fc.w", fc_w);
    fn("fc.b", fc_b);
  }
};

/// Kaiming fan-in initialization; BN gamma starts at v_th.
Model build_model(const ArchSpec& arch, const LifConfig& lif, index_t in_channels, index_t in_h,
                  index_t in_w, index_t num_classes, std::uint64_t seed);

struct BoundParam {
  std::string name;
  Tensor* host = nullptr;
  Var leaf;
};

struct ForwardOptions {
  bool training = false;             // batch statistics vs running statistics
  bool update_running_stats = true;  // only applies in training mode
  bool record_layer_inputs = false;  // keep synaptic-layer input stacks, for op counting
};

struct ForwardResult {
  Var stacked_logits;              // (T*N, K), t-major row blocks
  std::vector<Tensor> outputs;     // O(t) values, each (N, K)
  std::vector<BoundParam> params;  // leaves bound this pass, model order
  /// Input activation stack feeding each conv layer and the readout, in layer
  /// order, when record_layer_inputs is set.
  std::vector<Tensor> layer_inputs;
};

/// Runs the network over `steps` unrolled timesteps. `stacked_input` is
/// (T*N, C, H, W) with t-major row blocks (see replicate_frames).
ForwardResult forward(Tape& tape, Model& model, const Tensor& stacked_input, index_t steps,
                      const ForwardOptions& opts);

/// Time-stacks a static batch: block t of the result is the whole batch,
/// giving the direct-encoding input (same frame at every step).
Tensor replicate_frames(const Tensor& frames, index_t steps);

/// Differentiable tdBN over a (M, C, H, W) stack. Exposed for tests; forward()
/// calls this per conv block.
Var tdbn_forward(Tape& tape, Var x, Var gamma, Var beta, TdbnParams& params, bool training,
                 bool update_running_stats);

/// Merges eval-mode BN statistics into conv weights and biases:
///   w_hat = w * gamma / alpha,  b_hat = beta + (b - mean) * gamma / alpha
/// with alpha = sqrt(running_var + eps). The returned model evaluates
/// identically to the unfolded one in eval mode.
Model fold_bn(const Model& model);

// Versioned little-endian checkpoint container (see docs/FORMATS.md).
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace spiketrain
