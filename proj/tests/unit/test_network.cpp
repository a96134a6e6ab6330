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
#include <cstdio>

#include "doctest.h"
#include "oracles.hpp"
#include "spiketrain/network.hpp"
#include "spiketrain/rng.hpp"

using namespace spiketrain;

namespace {

TdbnParams fresh_bn(index_t channels) {
  TdbnParams bn;
  bn.gamma = Tensor::full({channels}, 1.0);
  bn.beta = Tensor({channels});
  bn.running_mean = Tensor({channels});
  bn.running_var = Tensor::full({channels}, 1.0);
  return bn;
}

}  // namespace

TEST_CASE("constant input normalizes to the shift parameter") {
  Tape t;
  TdbnParams bn = fresh_bn(2);
  bn.beta = Tensor({2}, {0.3, -0.7});
  Tensor x({4, 2, 3, 3});
  for (index_t i = 0; i < x.numel(); ++i) x[i] = (i / 9) % 2 == 0 ? 5.0 : -2.0;
  Var xv = t.leaf(x);
  Var g = t.leaf(bn.gamma);
  Var b = t.leaf(bn.beta);
  Var y = tdbn_forward(t, xv, g, b, bn, true, true);
  for (index_t n = 0; n < 4; ++n) {
    for (index_t c = 0; c < 2; ++c) {
      for (index_t p = 0; p < 9; ++p) {
        CHECK(t.value(y)[(n * 2 + c) * 9 + p] ==
              doctest::Approx(bn.beta[c]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("already-standardized input passes through the identity affine") {
  Tape t;
  TdbnParams bn = fresh_bn(1);
  Rng rng(5);
  Tensor x({64, 1, 2, 2});
  for (index_t i = 0; i < x.numel(); ++i) x[i] = rng.normal();
  // standardize exactly
  double mean = 0.0;
  for (index_t i = 0; i < x.numel(); ++i) mean += x[i];
  mean /= static_cast<double>(x.numel());
  double var = 0.0;
  for (index_t i = 0; i < x.numel(); ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= static_cast<double>(x.numel());
  for (index_t i = 0; i < x.numel(); ++i) x[i] = (x[i] - mean) / std::sqrt(var);

  Var y = tdbn_forward(t, t.leaf(x), t.leaf(bn.gamma), t.leaf(bn.beta), bn, true, false);
  for (index_t i = 0; i < x.numel(); ++i) {
    CHECK(t.value(y)[i] == doctest::Approx(x[i]).epsilon(1e-4));
  }
}

TEST_CASE("statistics are taken jointly over time, batch and space") {
  // Brute-force recompute per channel across every non-channel axis.
  Tape t;
  TdbnParams bn = fresh_bn(3);
  bn.gamma = Tensor({3}, {1.5, 0.5, 2.0});
  bn.beta = Tensor({3}, {0.1, -0.2, 0.0});
  Rng rng(7);
  Tensor x({10, 3, 4, 4});
  for (index_t i = 0; i < x.numel(); ++i) x[i] = rng.normal(0.5, 2.0);
  Var y = tdbn_forward(t, t.leaf(x), t.leaf(bn.gamma), t.leaf(bn.beta), bn, true, true);

  for (index_t c = 0; c < 3; ++c) {
    long double sum = 0.0L, sq = 0.0L;
    index_t count = 0;
    for (index_t n = 0; n < 10; ++n) {
      for (index_t p = 0; p < 16; ++p) {
        const double v = t.value(y)[(n * 3 + c) * 16 + p];
        sum += v;
        sq += static_cast<long double>(v) * v;
        ++count;
      }
    }
    const double m = static_cast<double>(sum / count);
    const double sd = std::sqrt(static_cast<double>(sq / count) - m * m);
    CHECK(m == doctest::Approx(bn.beta[c]).epsilon(1e-5));
    CHECK(sd == doctest::Approx(bn.gamma[c]).epsilon(1e-3));
  }
}

TEST_CASE("running statistics update in training mode only") {
  TdbnParams bn = fresh_bn(1);
  Rng rng(9);
  Tensor x({8, 1, 2, 2});
  for (index_t i = 0; i < x.numel(); ++i) x[i] = rng.normal(3.0, 1.0);
  {
    Tape t;
    tdbn_forward(t, t.leaf(x), t.leaf(bn.gamma), t.leaf(bn.beta), bn, false, true);
    CHECK(bn.running_mean[0] == 0.0);  // eval pass must not touch stats
  }
  {
    Tape t;
    tdbn_forward(t, t.leaf(x), t.leaf(bn.gamma), t.leaf(bn.beta), bn, true, true);
    CHECK(bn.running_mean[0] != 0.0);
  }
}

TEST_CASE("fold arithmetic") {
  LifConfig lif;
  Model m = build_model(parse_arch("2C3-FC"), lif, 1, 4, 4, 2, 1);

  SUBCASE("identity fold when scale matches the deviation") {
    // gamma = alpha, beta = 0, mean = 0 leaves weights unchanged.
    m.convs[0].bn.running_var = Tensor({2}, {4.0 - m.convs[0].bn.eps, 1.0 - m.convs[0].bn.eps});
    m.convs[0].bn.gamma = Tensor({2}, {2.0, 1.0});
    const Tensor w_before = m.convs[0].w;
    Model folded = fold_bn(m);
    for (index_t i = 0; i < w_before.numel(); ++i) {
      CHECK(folded.convs[0].w[i] == doctest::Approx(w_before[i]).epsilon(1e-12));
    }
    CHECK(folded.convs[0].b[0] == doctest::Approx(0.0));
  }

  SUBCASE("bias at the running mean folds to the shift") {
    m.convs[0].b = Tensor({2}, {0.4, -0.3});
    m.convs[0].bn.running_mean = m.convs[0].b;
    m.convs[0].bn.beta = Tensor({2}, {0.9, 0.1});
    Model folded = fold_bn(m);
    CHECK(folded.convs[0].b[0] == doctest::Approx(0.9));
    CHECK(folded.convs[0].b[1] == doctest::Approx(0.1));
  }
}

TEST_CASE("folded and eval-mode forward agree on every logit") {
  LifConfig lif;
  Model model = build_model(parse_arch(kArchTiny), lif, 1, 8, 8, 2, 77);
  Rng rng(13);
  for (ConvBlock& blk : model.convs) {
    for (index_t i = 0; i < blk.bn.running_mean.numel(); ++i) {
      blk.bn.running_mean[i] = rng.normal(0.0, 0.4);
      blk.bn.running_var[i] = 0.25 + rng.uniform();
      blk.bn.beta[i] = rng.normal(0.0, 0.2);
      blk.bn.gamma[i] = 0.5 + rng.uniform();
    }
  }
  Model folded = fold_bn(model);

  double max_diff = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor input({1, 1, 8, 8});
    for (index_t i = 0; i < input.numel(); ++i) input[i] = rng.uniform();
    const Tensor stacked = replicate_frames(input, 3);
    Tape t1, t2;
    ForwardOptions fwd;
    const Tensor& a = t1.value(forward(t1, model, stacked, 3, fwd).stacked_logits);
    const Tensor& b = t2.value(forward(t2, folded, stacked, 3, fwd).stacked_logits);
    for (index_t i = 0; i < a.numel(); ++i) {
      max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
    }
  }
  CHECK(max_diff < 1e-5);
}

TEST_CASE("zero input and zero parameters produce zero outputs") {
  LifConfig lif;
  Model model = build_model(parse_arch(kArchTiny), lif, 1, 8, 8, 2, 1);
  for (ConvBlock& blk : model.convs) {
    blk.w = Tensor(blk.w.shape());
    blk.bn.beta = Tensor(blk.bn.beta.shape());
  }
  model.fc_w = Tensor(model.fc_w.shape());
  model.fc_b = Tensor(model.fc_b.shape());
  Tape t;
  ForwardOptions fwd;
  fwd.training = true;
  const Tensor stacked = replicate_frames(Tensor({2, 1, 8, 8}), 2);
  ForwardResult f = forward(t, model, stacked, 2, fwd);
  for (index_t i = 0; i < t.value(f.stacked_logits).numel(); ++i) {
    CHECK(t.value(f.stacked_logits)[i] == 0.0);
  }
}

TEST_CASE("hand-unrolled two-layer network matches forward()") {
  // Independent reconstruction: conv -> LIF -> conv -> LIF -> flatten -> FC,
  // with normalization disabled by marking blocks folded.
  LifConfig lif;
  Model model = build_model(parse_arch("2C3-3C3-FC"), lif, 1, 4, 4, 2, 55);
  for (ConvBlock& blk : model.convs) {
    blk.folded = true;  // plain conv + bias path
    for (index_t i = 0; i < blk.b.numel(); ++i) blk.b[i] = 0.05 * static_cast<double>(i + 1);
  }
  Rng rng(19);
  Tensor frame({1, 1, 4, 4});
  for (index_t i = 0; i < frame.numel(); ++i) frame[i] = rng.uniform();
  const index_t steps = 3;
  const Tensor stacked = replicate_frames(frame, steps);

  Tape tape;
  ForwardOptions fwd;
  ForwardResult f = forward(tape, model, stacked, steps, fwd);

  // Oracle path on plain vectors.
  const std::vector<double> x(frame.data(), frame.data() + 16);
  std::vector<double> u1(2 * 16, 0.0), a1(2 * 16, 0.0);
  std::vector<double> u2(3 * 16, 0.0), a2(3 * 16, 0.0);
  oracle::LifOracle neuron{lif.tau, lif.v_th};
  for (index_t t = 0; t < steps; ++t) {
    std::vector<double> i1 =
        oracle::conv2d_chw(x, 1, 4, 4, model.convs[0].w.values(), 2, 3);
    for (index_t c = 0; c < 2; ++c) {
      for (index_t p = 0; p < 16; ++p) i1[static_cast<std::size_t>(c * 16 + p)] += model.convs[0].b[c];
    }
    neuron.step(u1, i1, a1);
    std::vector<double> i2 = oracle::conv2d_chw(a1, 2, 4, 4, model.convs[1].w.values(), 3, 3);
    for (index_t c = 0; c < 3; ++c) {
      for (index_t p = 0; p < 16; ++p) i2[static_cast<std::size_t>(c * 16 + p)] += model.convs[1].b[c];
    }
    neuron.step(u2, i2, a2);
    for (index_t cls = 0; cls < 2; ++cls) {
      double logit = model.fc_b[cls];
      for (index_t ftr = 0; ftr < 48; ++ftr) {
        logit += a2[static_cast<std::size_t>(ftr)] * model.fc_w[ftr * 2 + cls];
      }
      CHECK(f.outputs[static_cast<std::size_t>(t)][cls] ==
            doctest::Approx(logit).epsilon(1e-12));
    }
  }
}

TEST_CASE("steep sigmoid converges to the binary forward away from threshold") {
  LifConfig hard;
  Model model = build_model(parse_arch("2C3-FC"), hard, 1, 4, 4, 2, 21);
  // Drive potentials decisively above/below threshold: folded blocks with a
  // bias offset keep |u - v_th| bounded away from zero.
  model.convs[0].folded = true;
  for (index_t i = 0; i < model.convs[0].w.numel(); ++i) model.convs[0].w[i] *= 3.0;
  model.convs[0].b = Tensor({2}, {-0.4, 0.35});

  Model soft = model;
  soft.lif.activation = ActivationMode::kSigmoid;
  soft.lif.sigmoid_k = 1e6;

  Rng rng(29);
  Tensor frame({2, 1, 4, 4});
  for (index_t i = 0; i < frame.numel(); ++i) frame[i] = rng.uniform();
  const Tensor stacked = replicate_frames(frame, 4);

  Tape t1, t2;
  ForwardOptions fwd;
  const Tensor& a = t1.value(forward(t1, model, stacked, 4, fwd).stacked_logits);
  const Tensor& b = t2.value(forward(t2, soft, stacked, 4, fwd).stacked_logits);
  for (index_t i = 0; i < a.numel(); ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-4));
  }
}

TEST_CASE("checkpoint container round-trips bit-exactly") {
  LifConfig lif;
  lif.detach_reset = true;
  lif.gamma_sg = 0.8;
  Model model = build_model(parse_arch(kArchTiny), lif, 3, 16, 16, 4, 101);
  Rng rng(3);
  for (ConvBlock& blk : model.convs) {
    for (index_t i = 0; i < blk.bn.running_mean.numel(); ++i) {
      blk.bn.running_mean[i] = rng.normal();
      blk.bn.running_var[i] = 1.0 + rng.uniform();
    }
  }

  const std::string path = "roundtrip_checkpoint.bin";
  save_model(path, model);
  Model loaded = load_model(path);
  std::remove(path.c_str());

  CHECK(loaded.arch.to_string() == model.arch.to_string());
  CHECK(loaded.lif.detach_reset == true);
  CHECK(loaded.lif.gamma_sg == 0.8);
  CHECK(loaded.num_classes == 4);
  REQUIRE(loaded.convs.size() == model.convs.size());
  for (std::size_t i = 0; i < model.convs.size(); ++i) {
    CHECK(loaded.convs[i].w.values() == model.convs[i].w.values());
    CHECK(loaded.convs[i].bn.running_var.values() == model.convs[i].bn.running_var.values());
  }
  CHECK(loaded.fc_w.values() == model.fc_w.values());
}
