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

#include <benchmark/benchmark.h>

#include "spiketrain/network.hpp"
#include "spiketrain/objective.hpp"
#include "spiketrain/rng.hpp"
#include "spiketrain/trainer.hpp"

using namespace spiketrain;

namespace {

LabeledFrames bench_data(index_t per_class) {
  SyntheticOptions opts;
  opts.num_classes = 2;
  opts.samples_per_class = per_class;
  opts.size = 16;
  opts.noise = 0.8;
  opts.seed = 7;
  return synthetic_patterns(opts);
}

void BM_forward(benchmark::State& state) {
  const index_t steps = state.range(0);
  Model model = build_model(parse_arch(kArchTiny), LifConfig{}, 1, 16, 16, 2, 1);
  const LabeledFrames data = bench_data(8);
  const Tensor stacked = replicate_frames(data.frames, steps);
  for (auto _ : state) {
    Tape tape;
    ForwardOptions fwd;
    ForwardResult f = forward(tape, model, stacked, steps, fwd);
    benchmark::DoNotOptimize(tape.value(f.stacked_logits).data());
  }
}
BENCHMARK(BM_forward)->Arg(2)->Arg(4)->Arg(8);

void BM_train_step(benchmark::State& state) {
  const index_t steps = state.range(0);
  Model model = build_model(parse_arch(kArchTiny), LifConfig{}, 1, 16, 16, 2, 1);
  const LabeledFrames data = bench_data(8);
  const Tensor stacked = replicate_frames(data.frames, steps);
  OptimizerState opt;
  OptimizerConfig opt_cfg;
  LossSpec spec;
  for (auto _ : state) {
    Tape tape;
    ForwardOptions fwd;
    fwd.training = true;
    ForwardResult f = forward(tape, model, stacked, steps, fwd);
    Var loss = tape_loss(tape, f.stacked_logits, steps, data.labels, 2, spec);
    tape.backward(loss);
    std::vector<Tensor*> params;
    std::vector<Tensor> grads;
    for (const BoundParam& p : f.params) {
      params.push_back(p.host);
      grads.push_back(tape.grad(p.leaf));
    }
    optimizer_step(params, grads, opt, opt_cfg, 1e-3);
    benchmark::DoNotOptimize(model.fc_w.data());
  }
}
BENCHMARK(BM_train_step)->Arg(2)->Arg(4)->Arg(8);

void BM_conv2d(benchmark::State& state) {
  Rng rng(3);
  Tensor x({16, 16, 16, 16});
  for (index_t i = 0; i < x.numel(); ++i) x[i] = rng.normal();
  Tensor w({32, 16, 3, 3});
  for (index_t i = 0; i < w.numel(); ++i) w[i] = rng.normal();
  for (auto _ : state) {
    Tape tape;
    Var y = tape.conv2d(tape.leaf(x), tape.leaf(w), 1);
    benchmark::DoNotOptimize(tape.value(y).data());
  }
}
BENCHMARK(BM_conv2d);

void BM_evaluate(benchmark::State& state) {
  Model model = build_model(parse_arch(kArchTiny), LifConfig{}, 1, 16, 16, 2, 1);
  LabeledFrames data = bench_data(32);
  for (auto _ : state) {
    EvalReport rep = evaluate(model, data, 4, 16, LossSpec{});
    benchmark::DoNotOptimize(rep.mean_output_accuracy);
  }
}
BENCHMARK(BM_evaluate);

}  // namespace

BENCHMARK_MAIN();
