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

#include "spiketrain/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace spiketrain {

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("optimizer: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("optimizer: betas must be in [0,1)");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("optimizer: momentum must be in [0,1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("optimizer: negative weight decay");
}

double scheduled_lr(LrSchedule schedule, double base_lr, index_t epoch, index_t total_epochs) {
  if (schedule == LrSchedule::kConstant || total_epochs <= 0) return base_lr;
  const double x = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * x));
}

namespace {

void prepare_state(OptimizerState& state, const std::vector<Tensor*>& params, bool need_v) {
  if (state.m.size() != params.size()) {
    state.m.clear();
    for (const Tensor* p : params) state.m.emplace_back(p->shape());
  }
  if (need_v && state.v.size() != params.size()) {
    state.v.clear();
    for (const Tensor* p : params) state.v.emplace_back(p->shape());
  }
}

void check_shapes(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer: " + std::to_string(params.size()) +
                                " parameters but " + std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw std::invalid_argument("optimizer: gradient shape " + shape_str(grads[i].shape()) +
                                  " does not match parameter " +
                                  shape_str(params[i]->shape()));
    }
  }
}

}  // namespace

void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               OptimizerState& state, const OptimizerConfig& cfg, double lr) {
  cfg.validate();
  if (!(lr > 0.0)) throw std::invalid_argument("optimizer: lr must be positive");
  check_shapes(params, grads);
  prepare_state(state, params, /*need_v=*/true);
  ++state.step_count;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p];
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (index_t i = 0; i < w.numel(); ++i) {
      const double g = grads[p][i] + cfg.weight_decay * w[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void sgd_momentum_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                       OptimizerState& state, const OptimizerConfig& cfg, double lr) {
  cfg.validate();
  if (!(lr > 0.0)) throw std::invalid_argument("optimizer: lr must be positive");
  check_shapes(params, grads);
  prepare_state(state, params, /*need_v=*/false);
  ++state.step_count;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p];
    Tensor& vel = state.m[p];
    for (index_t i = 0; i < w.numel(); ++i) {
      const double g = grads[p][i] + cfg.weight_decay * w[i];
      vel[i] = cfg.momentum * vel[i] + g;
      w[i] -= lr * vel[i];
    }
  }
}

void optimizer_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                    OptimizerState& state, const OptimizerConfig& cfg, double lr) {
  if (cfg.kind == OptimizerKind::kAdam) {
    adam_step(params, grads, state, cfg, lr);
  } else {
    sgd_momentum_step(params, grads, state, cfg, lr);
  }
}

}  // namespace spiketrain
