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

#include "spiketrain/tensor.hpp"

namespace spiketrain {

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.9;
  double weight_decay = 0.0;  // classic (coupled) L2 for both optimizers

  void validate() const;
};

enum class LrSchedule { kCosineToZero, kConstant };

/// lr for epoch e of `total`; cosine decays from base toward zero.
double scheduled_lr(LrSchedule schedule, double base_lr, index_t epoch, index_t total_epochs);

/// Per-parameter optimizer state; slots follow the caller's parameter order.
struct OptimizerState {
  std::vector<Tensor> m;  // adam first moment / sgd velocity
  std::vector<Tensor> v;  // adam second moment
  index_t step_count = 0;
};

/// Bias-corrected Adam update, in place. State slots are created on first use.
void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               OptimizerState& state, const OptimizerConfig& cfg, double lr);

/// Classic momentum SGD with coupled weight decay, in place.
void sgd_momentum_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                       OptimizerState& state, const OptimizerConfig& cfg, double lr);

/// Dispatches on cfg.kind.
void optimizer_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                    OptimizerState& state, const OptimizerConfig& cfg, double lr);

}  // namespace spiketrain
