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

#include <cmath>

#include "doctest.h"
#include "spiketrain/optim.hpp"

using namespace spiketrain;

TEST_CASE("zero gradient and zero state leave parameters unchanged") {
  Tensor w({3}, {1.0, -2.0, 0.5});
  const Tensor before = w;
  std::vector<Tensor*> params = {&w};
  std::vector<Tensor> grads = {Tensor({3})};
  OptimizerState state;
  OptimizerConfig cfg;

  SUBCASE("adam") {
    cfg.kind = OptimizerKind::kAdam;
    adam_step(params, grads, state, cfg, 0.1);
    for (index_t i = 0; i < 3; ++i) CHECK(w[i] == before[i]);
  }
  SUBCASE("sgd") {
    cfg.kind = OptimizerKind::kSgd;
    sgd_momentum_step(params, grads, state, cfg, 0.1);
    for (index_t i = 0; i < 3; ++i) CHECK(w[i] == before[i]);
  }
}

TEST_CASE("adam drives a scalar quadratic to its optimum") {
  // f(w) = (w - 3)^2, grad = 2 (w - 3)
  Tensor w({1}, {-5.0});
  std::vector<Tensor*> params = {&w};
  OptimizerState state;
  OptimizerConfig cfg;
  for (int step = 0; step < 500; ++step) {
    std::vector<Tensor> grads = {Tensor({1}, {2.0 * (w[0] - 3.0)})};
    adam_step(params, grads, state, cfg, 0.1);
  }
  CHECK(std::abs(w[0] - 3.0) < 1e-6);
}

TEST_CASE("momentum velocity approaches the geometric limit under constant gradient") {
  Tensor w({1}, {0.0});
  std::vector<Tensor*> params = {&w};
  OptimizerState state;
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kSgd;
  cfg.momentum = 0.9;
  const double g = 0.25;
  double prev = 0.0;
  for (int step = 0; step < 400; ++step) {
    const double before = w[0];
    std::vector<Tensor> grads = {Tensor({1}, {g})};
    sgd_momentum_step(params, grads, state, cfg, 1.0);
    prev = before - w[0];  // lr * velocity
  }
  CHECK(prev == doctest::Approx(g / (1.0 - 0.9)).epsilon(1e-6));
}

TEST_CASE("coupled weight decay shrinks weights with zero gradient") {
  Tensor w({1}, {10.0});
  std::vector<Tensor*> params = {&w};
  OptimizerState state;
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kSgd;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.1;
  std::vector<Tensor> grads = {Tensor({1})};
  sgd_momentum_step(params, grads, state, cfg, 0.5);
  CHECK(w[0] == doctest::Approx(10.0 - 0.5 * 0.1 * 10.0));
}

TEST_CASE("non-positive learning rates are rejected") {
  Tensor w({1}, {1.0});
  std::vector<Tensor*> params = {&w};
  std::vector<Tensor> grads = {Tensor({1}, {1.0})};
  OptimizerState state;
  OptimizerConfig cfg;
  CHECK_THROWS(adam_step(params, grads, state, cfg, 0.0));
  CHECK_THROWS(sgd_momentum_step(params, grads, state, cfg, -0.1));
}

TEST_CASE("gradient shape mismatches are rejected") {
  Tensor w({2});
  std::vector<Tensor*> params = {&w};
  std::vector<Tensor> grads = {Tensor({3})};
  OptimizerState state;
  OptimizerConfig cfg;
  CHECK_THROWS(adam_step(params, grads, state, cfg, 0.1));
}

TEST_CASE("cosine schedule decays from the base toward zero") {
  CHECK(scheduled_lr(LrSchedule::kCosineToZero, 0.01, 0, 100) == doctest::Approx(0.01));
  CHECK(scheduled_lr(LrSchedule::kCosineToZero, 0.01, 50, 100) == doctest::Approx(0.005));
  CHECK(scheduled_lr(LrSchedule::kCosineToZero, 0.01, 99, 100) <
        scheduled_lr(LrSchedule::kCosineToZero, 0.01, 98, 100));
  CHECK(scheduled_lr(LrSchedule::kCosineToZero, 0.01, 99, 100) > 0.0);
  CHECK(scheduled_lr(LrSchedule::kConstant, 0.01, 73, 100) == 0.01);
}
