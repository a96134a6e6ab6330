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

#include "spiketrain/lif.hpp"

#include <cmath>
#include <stdexcept>

namespace spiketrain {

void LifConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("lif: tau must be in (0, 1]");
  if (!(v_th > 0.0)) throw std::invalid_argument("lif: v_th must be positive");
  if (!(gamma_sg > 0.0)) throw std::invalid_argument("lif: gamma_sg must be positive");
  if (activation == ActivationMode::kSigmoid && !(sigmoid_k > 0.0)) {
    throw std::invalid_argument("lif: sigmoid_k must be positive");
  }
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double heaviside(double x) { return x >= 0.0 ? 1.0 : 0.0; }  // fires at equality

inline double triangle(double u_minus_vth, double gamma) {
  const double t = gamma - std::abs(u_minus_vth);
  return t > 0.0 ? t / (gamma * gamma) : 0.0;
}

}  // namespace

NeuronState lif_step(const NeuronState& state, const Tensor& input, const LifConfig& cfg) {
  cfg.validate();
  if (!state.u.same_shape(input)) {
    throw std::invalid_argument("lif_step: state shape " + shape_str(state.u.shape()) +
                                " does not match input " + shape_str(input.shape()));
  }
  if (!input.all_finite()) throw std::invalid_argument("lif_step: non-finite input");

  NeuronState next;
  next.u = Tensor(input.shape());
  next.a = Tensor(input.shape());
  for (index_t i = 0; i < input.numel(); ++i) {
    const double u_pre = cfg.tau * state.u[i] + input[i];
    double a;
    if (cfg.activation == ActivationMode::kHeavisideTriangle) {
      a = heaviside(u_pre - cfg.v_th);
    } else {
      a = sigmoid(cfg.sigmoid_k * (u_pre - cfg.v_th));
    }
    next.a[i] = a;
    next.u[i] = u_pre * (1.0 - a);
  }
  return next;
}

Tensor surrogate_grad(const Tensor& u_pre, const LifConfig& cfg) {
  cfg.validate();
  Tensor out(u_pre.shape());
  for (index_t i = 0; i < u_pre.numel(); ++i) {
    out[i] = triangle(u_pre[i] - cfg.v_th, cfg.gamma_sg);
  }
  return out;
}

Tensor sigmoid_activation(const Tensor& u_pre, double k, double v_th) {
  if (!(k > 0.0)) throw std::invalid_argument("sigmoid_activation: k must be positive");
  Tensor out(u_pre.shape());
  for (index_t i = 0; i < u_pre.numel(); ++i) out[i] = sigmoid(k * (u_pre[i] - v_th));
  return out;
}

Var spike_activation(Tape& tape, Var u_pre, const LifConfig& cfg) {
  cfg.validate();
  const double v_th = cfg.v_th;
  if (cfg.activation == ActivationMode::kHeavisideTriangle) {
    const double gamma = cfg.gamma_sg;
    return tape.custom_unary(
        u_pre, [v_th](double u) { return heaviside(u - v_th); },
        [v_th, gamma](double u, double) { return triangle(u - v_th, gamma); });
  }
  const double k = cfg.sigmoid_k;
  return tape.custom_unary(
      u_pre, [v_th, k](double u) { return sigmoid(k * (u - v_th)); },
      [k](double, double a) { return k * a * (1.0 - a); });
}

Var lif_unroll(Tape& tape, Var stacked_input, index_t steps, const LifConfig& cfg) {
  cfg.validate();
  if (steps < 1) throw std::invalid_argument("lif_unroll: need at least one step");
  if (!tape.value(stacked_input).all_finite()) {
    throw std::invalid_argument("lif_unroll: non-finite input");
  }
  std::vector<Var> drive = tape.split0(stacked_input, steps);
  const std::vector<index_t> step_shape = tape.value(drive[0]).shape();

  Var u = tape.leaf(Tensor(step_shape));  // u(0) = 0
  std::vector<Var> spikes;
  spikes.reserve(static_cast<std::size_t>(steps));
  for (index_t t = 0; t < steps; ++t) {
    Var u_pre = tape.add(tape.scale(u, cfg.tau), drive[static_cast<std::size_t>(t)]);
    Var a = spike_activation(tape, u_pre, cfg);
    Var a_reset = cfg.detach_reset ? tape.detach(a) : a;
    // u_next = u_pre * (1 - a)
    Var keep = tape.add_scalar(tape.scale(a_reset, -1.0), 1.0);
    u = tape.mul(u_pre, keep);
    spikes.push_back(a);
  }
  return tape.concat0(spikes);
}

ReadoutRecord readout_accumulate(const std::vector<Tensor>& presynaptic) {
  if (presynaptic.empty()) {
    throw std::invalid_argument("readout_accumulate: empty sequence");
  }
  ReadoutRecord rec;
  rec.outputs = presynaptic;
  rec.mean = Tensor(presynaptic[0].shape());
  for (const Tensor& o : presynaptic) {
    if (!o.same_shape(rec.mean)) {
      throw std::invalid_argument("readout_accumulate: shape mismatch " +
                                  shape_str(o.shape()) + " vs " + shape_str(rec.mean.shape()));
    }
    for (index_t i = 0; i < o.numel(); ++i) rec.mean[i] += o[i];
  }
  const double inv = 1.0 / static_cast<double>(presynaptic.size());
  for (index_t i = 0; i < rec.mean.numel(); ++i) rec.mean[i] *= inv;
  return rec;
}

}  // namespace spiketrain
