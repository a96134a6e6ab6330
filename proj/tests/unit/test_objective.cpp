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
#include "oracles.hpp"
#include "spiketrain/objective.hpp"
#include "spiketrain/rng.hpp"
#include "spiketrain/tape.hpp"

using namespace spiketrain;

namespace {

std::vector<Tensor> random_outputs(Rng& rng, index_t steps, index_t n, index_t k,
                                   double stddev = 3.0) {
  std::vector<Tensor> outputs;
  for (index_t t = 0; t < steps; ++t) {
    Tensor o({n, k});
    for (index_t i = 0; i < o.numel(); ++i) o[i] = rng.normal(0.0, stddev);
    outputs.push_back(std::move(o));
  }
  return outputs;
}

std::vector<int> random_labels(Rng& rng, index_t n, index_t k) {
  std::vector<int> y;
  for (index_t i = 0; i < n; ++i) y.push_back(static_cast<int>(rng.uniform_int(0, k - 1)));
  return y;
}

}  // namespace

TEST_CASE("single-step losses equal plain cross-entropy") {
  Rng rng(1);
  auto outputs = random_outputs(rng, 1, 5, 4);
  auto labels = random_labels(rng, 5, 4);
  const double ce = oracle::mean_ce(outputs[0], labels);
  CHECK(loss_sdt(outputs, labels) == doctest::Approx(ce).epsilon(1e-12));
  CHECK(loss_tet(outputs, labels) == doctest::Approx(ce).epsilon(1e-12));
}

TEST_CASE("time-constant outputs collapse both losses to the same value") {
  Rng rng(2);
  Tensor o({3, 5});
  for (index_t i = 0; i < o.numel(); ++i) o[i] = rng.normal(0.0, 2.0);
  std::vector<Tensor> outputs(6, o);
  auto labels = random_labels(rng, 3, 5);
  const double s = loss_sdt(outputs, labels);
  const double t = loss_tet(outputs, labels);
  CHECK(std::abs(s - t) < 1e-12);
  CHECK(s == doctest::Approx(oracle::mean_ce(o, labels)).epsilon(1e-12));
}

TEST_CASE("losses match the high-precision oracle on random draws") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const index_t steps = rng.uniform_int(1, 8);
    const index_t n = rng.uniform_int(1, 6);
    const index_t k = rng.uniform_int(2, 10);
    auto outputs = random_outputs(rng, steps, n, k);
    auto labels = random_labels(rng, n, k);
    CHECK(loss_sdt(outputs, labels) ==
          doctest::Approx(oracle::sdt_loss(outputs, labels)).epsilon(1e-10));
    CHECK(loss_tet(outputs, labels) ==
          doctest::Approx(oracle::tet_loss(outputs, labels)).epsilon(1e-10));
  }
}

TEST_CASE("squared-error term") {
  SUBCASE("exact target gives zero") {
    Tensor o({2, 3});
    o[0 * 3 + 1] = 1.0;  // label 1 at phi=1
    o[1 * 3 + 2] = 1.0;  // label 2
    std::vector<Tensor> outputs(4, o);
    CHECK(loss_mse(outputs, {1, 2}, 1.0) == 0.0);
  }
  SUBCASE("random draw matches the direct mean of squares") {
    Rng rng(4);
    auto outputs = random_outputs(rng, 3, 2, 4);
    auto labels = random_labels(rng, 2, 4);
    long double acc = 0.0L;
    for (const Tensor& o : outputs) {
      for (index_t i = 0; i < 2; ++i) {
        for (index_t j = 0; j < 4; ++j) {
          const double tgt = (j == labels[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
          acc += static_cast<long double>(o[i * 4 + j] - tgt) * (o[i * 4 + j] - tgt);
        }
      }
    }
    const double expected = static_cast<double>(acc / (3.0L * 2.0L * 4.0L));
    CHECK(loss_mse(outputs, labels, 1.0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("uniform target variant") {
    Tensor o = Tensor::full({1, 3}, 0.5);
    std::vector<Tensor> outputs(2, o);
    CHECK(loss_mse(outputs, {0}, 0.5, MseTarget::kUniformPhi) == 0.0);
  }
}

TEST_CASE("combined objective endpoints and linearity") {
  Rng rng(5);
  auto outputs = random_outputs(rng, 4, 3, 5);
  auto labels = random_labels(rng, 3, 5);

  LossSpec spec;
  spec.kind = LossKind::kTotal;
  spec.phi = 1.0;

  spec.lambda = 0.0;
  CHECK(loss_total(outputs, labels, spec).total ==
        doctest::Approx(loss_tet(outputs, labels)).epsilon(1e-12));
  spec.lambda = 1.0;
  CHECK(loss_total(outputs, labels, spec).total ==
        doctest::Approx(loss_mse(outputs, labels, 1.0)).epsilon(1e-12));

  // exact linearity in lambda
  spec.lambda = 0.05;
  const LossBreakdown at05 = loss_total(outputs, labels, spec);
  CHECK(at05.total ==
        doctest::Approx(0.95 * at05.ce_term + 0.05 * at05.mse_term).epsilon(1e-15));
  spec.lambda = 0.6;
  const LossBreakdown at6 = loss_total(outputs, labels, spec);
  CHECK(at6.total == doctest::Approx(0.4 * at6.ce_term + 0.6 * at6.mse_term).epsilon(1e-15));

  // reconstruction from parts
  CHECK(std::abs(at05.total - ((1 - 0.05) * at05.ce_term + 0.05 * at05.mse_term)) < 1e-12);
  CHECK(at05.per_timestep_ce.size() == 4);
}

TEST_CASE("per-step error signals") {
  SUBCASE("signal vanishes when the softmax of the mean hits the one-hot target") {
    // Drive one logit to dominance so softmax(O_mean) ~ onehot.
    Tensor o({1, 3});
    o[0] = 200.0;
    std::vector<Tensor> outputs(4, o);
    auto sig = analytic_grads(outputs, {0}, LossKind::kSdt);
    for (const Tensor& s : sig) {
      for (index_t i = 0; i < s.numel(); ++i) CHECK(std::abs(s[i]) < 1e-12);
    }
  }
  SUBCASE("single step: the two objectives emit the same signal") {
    Rng rng(6);
    auto outputs = random_outputs(rng, 1, 2, 4);
    auto labels = random_labels(rng, 2, 4);
    auto a = analytic_grads(outputs, labels, LossKind::kSdt);
    auto b = analytic_grads(outputs, labels, LossKind::kTet);
    for (index_t i = 0; i < a[0].numel(); ++i) {
      CHECK(a[0][i] == doctest::Approx(b[0][i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("closed-form readout gradients match the tape to 1e-10") {
  // O(t) = x(t) W on a single linear layer; dL/dW must equal
  // sum_t x(t)^T signal(t) with the per-step signals, batch-meaned.
  Rng rng(7);
  const index_t steps = 4, n = 3, features = 6, k = 5;
  Tensor w({features, k});
  for (index_t i = 0; i < w.numel(); ++i) w[i] = rng.normal(0.0, 0.5);
  std::vector<Tensor> xs;
  for (index_t t = 0; t < steps; ++t) {
    Tensor x({n, features});
    for (index_t i = 0; i < x.numel(); ++i) x[i] = rng.normal();
    xs.push_back(std::move(x));
  }
  auto labels = random_labels(rng, n, k);

  for (LossKind kind : {LossKind::kSdt, LossKind::kTet}) {
    Tape tape;
    Var wv = tape.leaf(w, true);
    std::vector<Var> outs;
    for (index_t t = 0; t < steps; ++t) outs.push_back(tape.matmul(tape.leaf(xs[t]), wv));
    Var stacked = tape.concat0(outs);
    Var loss = (kind == LossKind::kSdt) ? tape_loss_sdt(tape, stacked, steps, labels)
                                        : tape_loss_tet(tape, stacked, steps, labels);
    tape.backward(loss);
    const Tensor tape_grad = tape.grad(wv);

    std::vector<Tensor> values;
    for (index_t t = 0; t < steps; ++t) {
      Tensor o({n, k});
      const Tensor& v = tape.value(outs[static_cast<std::size_t>(t)]);
      for (index_t i = 0; i < o.numel(); ++i) o[i] = v[i];
      values.push_back(std::move(o));
    }
    const std::vector<Tensor> signals = analytic_grads(values, labels, kind);

    Tensor closed({features, k});
    for (index_t t = 0; t < steps; ++t) {
      for (index_t i = 0; i < n; ++i) {
        for (index_t f = 0; f < features; ++f) {
          for (index_t j = 0; j < k; ++j) {
            closed[f * k + j] += xs[static_cast<std::size_t>(t)][i * features + f] *
                                 signals[static_cast<std::size_t>(t)][i * k + j] /
                                 static_cast<double>(n);
          }
        }
      }
    }
    for (index_t i = 0; i < closed.numel(); ++i) {
      CHECK(tape_grad[i] == doctest::Approx(closed[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("the per-step objective bounds the time-averaged one") {
  SUBCASE("equality for time-constant outputs") {
    Rng rng(8);
    Tensor o({2, 4});
    for (index_t i = 0; i < o.numel(); ++i) o[i] = rng.normal(0.0, 2.0);
    std::vector<Tensor> outputs(5, o);
    const Lemma1Result r = lemma1_check(outputs, {1, 3});
    CHECK(r.holds);
    CHECK(std::abs(r.l_tet - r.l_sdt) < 1e-12);
  }
  SUBCASE("random sweep never violates the bound") {
    Rng rng(9);
    for (int trial = 0; trial < 10000; ++trial) {
      const index_t steps = rng.uniform_int(1, 8);
      const index_t k = rng.uniform_int(2, 10);
      auto outputs = random_outputs(rng, steps, 1, k);
      auto labels = random_labels(rng, 1, k);
      CHECK(lemma1_check(outputs, labels).holds);
    }
  }
  SUBCASE("adversarial ascent on the gap finds no violation") {
    // Gradient ascent on l_sdt - l_tet w.r.t. the outputs, from many starts.
    Rng rng(10);
    for (int start = 0; start < 20; ++start) {
      const index_t steps = rng.uniform_int(2, 6);
      const index_t k = rng.uniform_int(2, 6);
      auto outputs = random_outputs(rng, steps, 1, k, 2.0);
      const std::vector<int> labels = {static_cast<int>(rng.uniform_int(0, k - 1))};
      for (int iter = 0; iter < 200; ++iter) {
        const auto sig_sdt = analytic_grads(outputs, labels, LossKind::kSdt);
        const auto sig_tet = analytic_grads(outputs, labels, LossKind::kTet);
        for (index_t t = 0; t < steps; ++t) {
          for (index_t i = 0; i < k; ++i) {
            const double g = sig_sdt[static_cast<std::size_t>(t)][i] -
                             sig_tet[static_cast<std::size_t>(t)][i];
            outputs[static_cast<std::size_t>(t)][i] += 0.5 * g;
          }
        }
        CHECK(lemma1_check(outputs, labels).holds);
      }
    }
  }
}

TEST_CASE("cross-entropy is shift invariant") {
  Rng rng(11);
  auto outputs = random_outputs(rng, 3, 2, 6);
  auto labels = random_labels(rng, 2, 6);
  const double base_sdt = loss_sdt(outputs, labels);
  const double base_tet = loss_tet(outputs, labels);
  for (Tensor& o : outputs) {
    for (index_t i = 0; i < o.numel(); ++i) o[i] += 123.456;
  }
  CHECK(std::abs(loss_sdt(outputs, labels) - base_sdt) < 1e-12);
  CHECK(std::abs(loss_tet(outputs, labels) - base_tet) < 1e-12);
}

TEST_CASE("invalid class indices are rejected") {
  Tensor o({1, 3});
  std::vector<Tensor> outputs(2, o);
  CHECK_THROWS(loss_sdt(outputs, {3}));
  CHECK_THROWS(loss_tet(outputs, {-1}));
  CHECK_THROWS(loss_mse(outputs, {7}, 1.0));
}

TEST_CASE("tape and value-level losses are two routes to the same number") {
  Rng rng(12);
  const index_t steps = 5, n = 3, k = 4;
  auto outputs = random_outputs(rng, steps, n, k);
  auto labels = random_labels(rng, n, k);

  Tensor stacked({steps * n, k});
  for (index_t t = 0; t < steps; ++t) {
    for (index_t i = 0; i < n * k; ++i) {
      stacked[t * n * k + i] = outputs[static_cast<std::size_t>(t)][i];
    }
  }
  Tape tape;
  Var sv = tape.leaf(stacked);
  CHECK(tape.value(tape_loss_sdt(tape, sv, steps, labels)).item() ==
        doctest::Approx(loss_sdt(outputs, labels)).epsilon(1e-12));
  CHECK(tape.value(tape_loss_tet(tape, sv, steps, labels)).item() ==
        doctest::Approx(loss_tet(outputs, labels)).epsilon(1e-12));
  CHECK(tape.value(tape_loss_mse(tape, sv, steps, labels, k, 1.0, MseTarget::kOnehotPhi))
            .item() == doctest::Approx(loss_mse(outputs, labels, 1.0)).epsilon(1e-12));

  LossSpec spec;
  spec.kind = LossKind::kTotal;
  spec.lambda = 0.05;
  spec.phi = 1.0;
  CHECK(tape.value(tape_loss(tape, sv, steps, labels, k, spec)).item() ==
        doctest::Approx(loss_total(outputs, labels, spec).total).epsilon(1e-12));
}
