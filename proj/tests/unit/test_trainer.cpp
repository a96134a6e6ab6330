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
#include "spiketrain/network.hpp"
#include "spiketrain/rng.hpp"
#include "spiketrain/trainer.hpp"

using namespace spiketrain;

namespace {

LabeledFrames tiny_dataset(index_t per_class, double noise, std::uint64_t seed,
                           index_t classes = 2, index_t size = 8) {
  SyntheticOptions opts;
  opts.num_classes = classes;
  opts.samples_per_class = per_class;
  opts.size = size;
  opts.noise = noise;
  opts.seed = seed;
  return synthetic_patterns(opts);
}

Model tiny_model(std::uint64_t seed, const LifConfig& lif, index_t classes = 2,
                 index_t size = 8) {
  return build_model(parse_arch("4C3-AP2-FC"), lif, 1, size, size, classes, seed);
}

std::vector<double> flatten_params(Model& m) {
  std::vector<double> out;
  m.for_each_param([&](const std::string&, Tensor& t) {
    out.insert(out.end(), t.values().begin(), t.values().end());
  });
  return out;
}

}  // namespace

TEST_CASE("single-step smooth run equals a plain feedforward net trained the same way") {
  // With one unrolled step, no regularizer, and smooth activation, the
  // spiking stack degenerates to an ordinary conv net with activation
  // sigmoid(k(x - v_th)). The reference below is assembled directly from
  // tape primitives: no recurrence, no reset, no spiking machinery.
  LifConfig lif;
  lif.activation = ActivationMode::kSigmoid;
  lif.sigmoid_k = 4.0;
  const LabeledFrames data = tiny_dataset(8, 0.4, 3);

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.steps = 1;
  cfg.batch_size = 4;
  cfg.loss.kind = LossKind::kTet;
  cfg.loss.lambda = 0.0;
  cfg.seed = 9;
  cfg.lr_schedule = LrSchedule::kConstant;
  cfg.optimizer.lr = 0.005;

  Model spiking = tiny_model(19, lif);
  Model reference = spiking;  // identical initial weights
  train(spiking, data, data, cfg);

  // Hand-built ANN trainer with the same shuffle stream and optimizer.
  OptimizerState opt;
  const double k = lif.sigmoid_k, v_th = lif.v_th;
  for (index_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<index_t> order(static_cast<std::size_t>(data.count()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<index_t>(i);
    Rng shuffle_rng = Rng::derive(cfg.seed, {rng_tag::kShuffle, static_cast<std::uint64_t>(epoch)});
    shuffle_rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += 4) {
      std::vector<index_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                               order.begin() + static_cast<std::ptrdiff_t>(begin + 4));
      LabeledFrames batch = data.gather(idx);
      Tape t;
      ConvBlock& blk = reference.convs[0];
      Var w = t.leaf(blk.w, true);
      Var g = t.leaf(blk.bn.gamma, true);
      Var be = t.leaf(blk.bn.beta, true);
      Var x = t.conv2d(t.leaf(batch.frames), w, 1);
      x = tdbn_forward(t, x, g, be, blk.bn, true, true);
      x = t.custom_unary(
          x, [k, v_th](double u) { return 1.0 / (1.0 + std::exp(-k * (u - v_th))); },
          [k](double, double a) { return k * a * (1.0 - a); });
      x = t.avg_pool(x, 2);
      x = t.reshape(x, {4, reference.fc_w.dim(0)});
      Var fw = t.leaf(reference.fc_w, true);
      Var fb = t.leaf(reference.fc_b, true);
      x = t.matmul(x, fw);
      x = t.add(x, t.broadcast(t.reshape(fb, {1, 2}), {4, 2}));
      Var loss = t.softmax_cross_entropy(x, batch.labels);
      t.backward(loss);
      std::vector<Tensor*> params = {&blk.w, &blk.bn.gamma, &blk.bn.beta, &reference.fc_w,
                                     &reference.fc_b};
      std::vector<Tensor> grads = {t.grad(w), t.grad(g), t.grad(be), t.grad(fw), t.grad(fb)};
      optimizer_step(params, grads, opt, cfg.optimizer, 0.005);
    }
  }
  const std::vector<double> wa = flatten_params(spiking);
  const std::vector<double> wb = flatten_params(reference);
  REQUIRE(wa.size() == wb.size());
  for (std::size_t i = 0; i < wa.size(); ++i) {
    CHECK(wa[i] == doctest::Approx(wb[i]).epsilon(1e-12));
  }
}

TEST_CASE("successive full batches of a separable eight-sample set mostly lower the loss") {
  LifConfig lif;
  lif.activation = ActivationMode::kSigmoid;
  lif.sigmoid_k = 4.0;
  const LabeledFrames data = tiny_dataset(4, 0.0, 21);  // 8 samples, separable

  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.steps = 2;
  cfg.batch_size = 8;  // the whole set is one batch, so losses are comparable
  cfg.loss.kind = LossKind::kTet;
  cfg.loss.lambda = 0.0;
  cfg.seed = 4;
  cfg.optimizer.lr = 0.02;

  Model model = tiny_model(23, lif);
  OptimizerState opt;
  std::vector<double> losses;
  for (index_t it = 0; it < 8; ++it) {
    EpochResult er = train_epoch(model, data, cfg, cfg.loss, opt, it, 0.02);
    REQUIRE(er.batch_losses.size() == 1);
    losses.push_back(er.batch_losses[0]);
  }
  int decreases = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i] < losses[i - 1]) ++decreases;
  }
  CHECK(decreases >= 6);
}

TEST_CASE("logged objective equals the lambda mix of its parts") {
  LifConfig lif;
  const LabeledFrames data = tiny_dataset(8, 0.5, 31);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.steps = 3;
  cfg.batch_size = 16;  // single batch covers the set
  cfg.loss.kind = LossKind::kTotal;
  cfg.loss.lambda = 0.05;
  cfg.loss.phi = 1.0;
  cfg.seed = 5;
  Model model = tiny_model(29, lif);
  OptimizerState opt;
  EpochResult er = train_epoch(model, data, cfg, cfg.loss, opt, 0, 0.01);
  CHECK(std::abs(er.loss_total - ((1.0 - 0.05) * er.loss_tet + 0.05 * er.loss_mse)) < 1e-12);
}

TEST_CASE("evaluation") {
  SUBCASE("a dominant constant output scores perfectly with zero variance") {
    LifConfig lif;
    Model model = tiny_model(37, lif);
    // Kill everything, then bias the readout towards class 1 regardless of
    // the (all-zero) spikes.
    for (ConvBlock& blk : model.convs) blk.w = Tensor(blk.w.shape());
    model.fc_w = Tensor(model.fc_w.shape());
    model.fc_b = Tensor({2}, {0.0, 50.0});
    LabeledFrames data = tiny_dataset(6, 0.3, 41);
    for (int& y : data.labels) y = 1;
    EvalReport rep = evaluate(model, data, 3, 4, LossSpec{});
    CHECK(rep.mean_output_accuracy == 1.0);
    CHECK(rep.per_timestep_variance == 0.0);
    for (double a : rep.per_timestep_accuracy) CHECK(a == 1.0);
  }
  SUBCASE("single step: the per-step list has one entry equal to the mean accuracy") {
    LifConfig lif;
    Model model = tiny_model(43, lif);
    const LabeledFrames data = tiny_dataset(8, 0.5, 47);
    EvalReport rep = evaluate(model, data, 1, 4, LossSpec{});
    REQUIRE(rep.per_timestep_accuracy.size() == 1);
    CHECK(rep.per_timestep_accuracy[0] == rep.mean_output_accuracy);
  }
  SUBCASE("random weights on balanced ten-class data sit near chance") {
    LifConfig lif;
    const LabeledFrames data = tiny_dataset(40, 0.8, 53, /*classes=*/10);
    Model model = build_model(parse_arch("4C3-AP2-FC"), lif, 1, 8, 8, 10, 59);
    EvalReport rep = evaluate(model, data, 2, 16, LossSpec{});
    CHECK(rep.mean_output_accuracy > 0.02);
    CHECK(rep.mean_output_accuracy < 0.25);
  }
  SUBCASE("variance equals the brute-force variance of the per-step list") {
    LifConfig lif;
    Model model = tiny_model(61, lif);
    const LabeledFrames data = tiny_dataset(10, 0.6, 67);
    EvalReport rep = evaluate(model, data, 4, 8, LossSpec{});
    double mean = 0.0;
    for (double a : rep.per_timestep_accuracy) mean += a;
    mean /= static_cast<double>(rep.per_timestep_accuracy.size());
    double var = 0.0;
    for (double a : rep.per_timestep_accuracy) var += (a - mean) * (a - mean);
    var /= static_cast<double>(rep.per_timestep_accuracy.size());
    CHECK(rep.per_timestep_variance == doctest::Approx(var).epsilon(1e-15));
  }
}

TEST_CASE("two runs with the same configuration produce identical weights") {
  LifConfig lif;
  const LabeledFrames train_data = tiny_dataset(8, 0.5, 71);
  const LabeledFrames test_data = tiny_dataset(4, 0.5, 73);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.steps = 2;
  cfg.batch_size = 4;
  cfg.seed = 11;
  cfg.augment.flip_probability = 0.5;  // stochastic path must be seeded too

  Model m1 = tiny_model(79, lif);
  Model m2 = tiny_model(79, lif);
  train(m1, train_data, test_data, cfg);
  train(m2, train_data, test_data, cfg);
  CHECK(flatten_params(m1) == flatten_params(m2));
}

TEST_CASE("objective switching") {
  LifConfig lif;
  const LabeledFrames train_data = tiny_dataset(8, 0.5, 83);
  const LabeledFrames test_data = tiny_dataset(4, 0.5, 89);

  TrainConfig tet_cfg;
  tet_cfg.epochs = 3;
  tet_cfg.steps = 2;
  tet_cfg.batch_size = 4;
  tet_cfg.seed = 13;
  tet_cfg.loss.kind = LossKind::kTet;
  tet_cfg.loss.lambda = 0.0;

  SUBCASE("switching at epoch zero is exactly the pure run") {
    TrainConfig switched = tet_cfg;
    switched.loss_switch_epoch = 0;
    Model a = tiny_model(97, lif);
    Model b = tiny_model(97, lif);
    train(a, train_data, test_data, tet_cfg);
    train(b, train_data, test_data, switched);
    CHECK(flatten_params(a) == flatten_params(b));
  }
  SUBCASE("a switch that never arrives is exactly the time-averaged run") {
    TrainConfig sdt_cfg = tet_cfg;
    sdt_cfg.loss.kind = LossKind::kSdt;
    TrainConfig switched = tet_cfg;  // targets TET but switches too late
    switched.epochs = 3;
    switched.loss_switch_epoch = 2;
    // epochs 0,1 run the time-averaged objective; epoch 2 would switch, so
    // compare against a two-epoch pure run plus one switched epoch instead.
    Model a = tiny_model(101, lif);
    Model b = tiny_model(101, lif);
    TrainConfig pure2 = sdt_cfg;
    pure2.epochs = 2;
    train(a, train_data, test_data, pure2);
    TrainConfig sw2 = switched;
    sw2.epochs = 2;
    sw2.loss_switch_epoch = std::nullopt;
    sw2.loss.kind = LossKind::kSdt;
    train(b, train_data, test_data, sw2);
    CHECK(flatten_params(a) == flatten_params(b));
  }
  SUBCASE("both loss columns are logged every epoch") {
    TrainConfig switched = tet_cfg;
    switched.loss_switch_epoch = 1;
    Model m = tiny_model(103, lif);
    TrainRunResult run = train(m, train_data, test_data, switched);
    for (const EpochMetrics& row : run.metrics) {
      CHECK(std::isfinite(row.loss_sdt));
      CHECK(std::isfinite(row.loss_tet));
    }
  }
}

TEST_CASE("accuracy equals a brute-force recount of argmax matches") {
  LifConfig lif;
  Model model = tiny_model(107, lif);
  const LabeledFrames data = tiny_dataset(10, 0.6, 109);
  const index_t steps = 3;
  EvalReport rep = evaluate(model, data, steps, 4, LossSpec{});

  index_t correct = 0;
  for (index_t i = 0; i < data.count(); ++i) {
    std::vector<index_t> one = {i};
    const Tensor stacked = stack_batch(data, one, steps);
    Tape tape;
    ForwardOptions fwd;
    ForwardResult f = forward(tape, model, stacked, steps, fwd);
    Tensor mean({1, model.num_classes});
    for (const Tensor& o : f.outputs) {
      for (index_t j = 0; j < model.num_classes; ++j) mean[j] += o[j];
    }
    index_t best = 0;
    for (index_t j = 1; j < model.num_classes; ++j) {
      if (mean[j] > mean[best]) best = j;
    }
    if (best == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  CHECK(rep.mean_output_accuracy ==
        doctest::Approx(static_cast<double>(correct) / static_cast<double>(data.count())));
}

TEST_CASE("time-inheritance scheduling") {
  LifConfig lif;
  const LabeledFrames train_data = tiny_dataset(8, 0.5, 113);
  const LabeledFrames test_data = tiny_dataset(4, 0.5, 127);

  TrainConfig initial;
  initial.epochs = 2;
  initial.steps = 2;
  initial.batch_size = 4;
  initial.seed = 17;

  SUBCASE("zero finetune budget degenerates to plain expansion") {
    TrainConfig finetune = initial;
    finetune.epochs = 0;  // disabled phase
    finetune.steps = 4;
    Model a = tiny_model(131, lif);
    Model b = tiny_model(131, lif);
    TitResult res = tit_run(a, train_data, test_data, initial, finetune);
    train(b, train_data, test_data, initial);
    CHECK(flatten_params(a) == flatten_params(b));
    CHECK(res.ledger.phases.size() == 1);
  }
  SUBCASE("ledger cost units follow the epochs-times-T model") {
    TrainConfig finetune = initial;
    finetune.epochs = 1;
    finetune.steps = 6;
    Model m = tiny_model(137, lif);
    TitResult res = tit_run(m, train_data, test_data, initial, finetune);
    REQUIRE(res.ledger.phases.size() == 2);
    CHECK(res.ledger.phases[0].cost_units == 4.0);   // 2 epochs * T=2
    CHECK(res.ledger.phases[1].cost_units == 6.0);   // 1 epoch * T=6
    CHECK(res.ledger.total_cost_units() == 10.0);
  }
  SUBCASE("finetune at a not-larger T is rejected") {
    TrainConfig finetune = initial;
    finetune.epochs = 1;
    finetune.steps = 2;
    Model m = tiny_model(139, lif);
    CHECK_THROWS(tit_run(m, train_data, test_data, initial, finetune));
  }
}

TEST_CASE("divergence aborts the epoch and preserves the last finite state") {
  LifConfig lif;
  lif.activation = ActivationMode::kSigmoid;
  lif.sigmoid_k = 4.0;
  const LabeledFrames data = tiny_dataset(8, 0.4, 149);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.steps = 2;
  cfg.batch_size = 4;
  cfg.seed = 23;
  Model model = tiny_model(151, lif);
  // Poison the readout so the first forward overflows to non-finite.
  model.fc_b = Tensor::full({2}, 1e308);
  model.fc_w = Tensor::full(model.fc_w.shape(), 1e308);
  const std::vector<double> before = flatten_params(model);
  OptimizerState opt;
  EpochResult er = train_epoch(model, data, cfg, cfg.loss, opt, 0, 0.01);
  CHECK(er.diverged);
  CHECK(flatten_params(model) == before);
}
