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

#include "spiketrain/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace spiketrain {

namespace {

void check_outputs(const std::vector<Tensor>& outputs, const std::vector<int>& labels) {
  if (outputs.empty()) throw std::invalid_argument("loss: empty output sequence");
  const Tensor& first = outputs[0];
  if (first.ndim() != 2) {
    throw std::invalid_argument("loss: outputs must be (N,K), got " + shape_str(first.shape()));
  }
  const index_t n = first.dim(0), k = first.dim(1);
  if (static_cast<index_t>(labels.size()) != n) {
    throw std::invalid_argument("loss: expected " + std::to_string(n) + " labels, got " +
                                std::to_string(labels.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw std::invalid_argument("loss: invalid class index " + std::to_string(labels[i]) +
                                  " for " + std::to_string(k) + " classes");
    }
  }
  for (const Tensor& o : outputs) {
    if (!o.same_shape(first)) {
      throw std::invalid_argument("loss: inconsistent output shapes " + shape_str(o.shape()) +
                                  " vs " + shape_str(first.shape()));
    }
  }
}

// Mean cross-entropy over rows of (N,K) logits, log-sum-exp stabilized.
double mean_ce(const Tensor& logits, const std::vector<int>& labels) {
  const index_t n = logits.dim(0), k = logits.dim(1);
  double loss = 0.0;
  for (index_t i = 0; i < n; ++i) {
    const double* row = logits.data() + i * k;
    double m = row[0];
    for (index_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (index_t j = 0; j < k; ++j) z += std::exp(row[j] - m);
    loss += std::log(z) - (row[labels[static_cast<std::size_t>(i)]] - m);
  }
  return loss / static_cast<double>(n);
}

Tensor mean_output(const std::vector<Tensor>& outputs) {
  Tensor mean(outputs[0].shape());
  for (const Tensor& o : outputs) {
    for (index_t i = 0; i < o.numel(); ++i) mean[i] += o[i];
  }
  const double inv = 1.0 / static_cast<double>(outputs.size());
  for (index_t i = 0; i < mean.numel(); ++i) mean[i] *= inv;
  return mean;
}

void softmax_row(const double* row, index_t k, double* out) {
  double m = row[0];
  for (index_t j = 1; j < k; ++j) m = std::max(m, row[j]);
  double z = 0.0;
  for (index_t j = 0; j < k; ++j) {
    out[j] = std::exp(row[j] - m);
    z += out[j];
  }
  for (index_t j = 0; j < k; ++j) out[j] /= z;
}

double target_at(MseTarget target, double phi, bool is_label) {
  switch (target) {
    case MseTarget::kOnehotPhi:
      return is_label ? phi : 0.0;
    case MseTarget::kUniformPhi:
      return phi;
  }
  return 0.0;
}

}  // namespace

double loss_sdt(const std::vector<Tensor>& outputs, const std::vector<int>& labels) {
  check_outputs(outputs, labels);
  return mean_ce(mean_output(outputs), labels);
}

double loss_tet(const std::vector<Tensor>& outputs, const std::vector<int>& labels) {
  check_outputs(outputs, labels);
  double acc = 0.0;
  for (const Tensor& o : outputs) acc += mean_ce(o, labels);
  return acc / static_cast<double>(outputs.size());
}

double loss_mse(const std::vector<Tensor>& outputs, const std::vector<int>& labels, double phi,
                MseTarget target) {
  check_outputs(outputs, labels);
  const index_t n = outputs[0].dim(0), k = outputs[0].dim(1);
  double acc = 0.0;
  for (const Tensor& o : outputs) {
    double step = 0.0;
    for (index_t i = 0; i < n; ++i) {
      for (index_t j = 0; j < k; ++j) {
        const double tgt = target_at(target, phi, j == labels[static_cast<std::size_t>(i)]);
        const double d = o[i * k + j] - tgt;
        step += d * d;
      }
    }
    acc += step / static_cast<double>(n * k);
  }
  return acc / static_cast<double>(outputs.size());
}

LossBreakdown loss_total(const std::vector<Tensor>& outputs, const std::vector<int>& labels,
                         const LossSpec& spec) {
  if (spec.kind == LossKind::kTotal && !(spec.lambda >= 0.0 && spec.lambda <= 1.0)) {
    throw std::invalid_argument("loss: lambda must be in [0,1]");
  }
  LossBreakdown out;
  out.per_timestep_ce.reserve(outputs.size());
  check_outputs(outputs, labels);
  for (const Tensor& o : outputs) out.per_timestep_ce.push_back(mean_ce(o, labels));

  if (spec.kind == LossKind::kSdt) {
    out.ce_term = loss_sdt(outputs, labels);
    out.mse_term = 0.0;
    out.total = out.ce_term;
    return out;
  }
  out.ce_term = loss_tet(outputs, labels);
  out.mse_term = loss_mse(outputs, labels, spec.phi, spec.mse_target);
  out.total = (1.0 - spec.lambda) * out.ce_term + spec.lambda * out.mse_term;
  return out;
}

std::vector<Tensor> analytic_grads(const std::vector<Tensor>& outputs,
                                   const std::vector<int>& labels, LossKind which) {
  check_outputs(outputs, labels);
  const index_t n = outputs[0].dim(0), k = outputs[0].dim(1);
  const double inv_t = 1.0 / static_cast<double>(outputs.size());
  std::vector<Tensor> signals;
  signals.reserve(outputs.size());

  Tensor mean;
  if (which == LossKind::kSdt) mean = mean_output(outputs);

  std::vector<double> probs(static_cast<std::size_t>(k));
  for (const Tensor& o : outputs) {
    Tensor sig({n, k});
    const Tensor& src = (which == LossKind::kSdt) ? mean : o;
    for (index_t i = 0; i < n; ++i) {
      softmax_row(src.data() + i * k, k, probs.data());
      for (index_t j = 0; j < k; ++j) {
        const double onehot = (j == labels[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
        sig[i * k + j] = inv_t * (probs[static_cast<std::size_t>(j)] - onehot);
      }
    }
    signals.push_back(std::move(sig));
  }
  return signals;
}

Lemma1Result lemma1_check(const std::vector<Tensor>& outputs, const std::vector<int>& labels) {
  Lemma1Result r;
  r.l_sdt = loss_sdt(outputs, labels);
  r.l_tet = loss_tet(outputs, labels);
  r.holds = r.l_tet >= r.l_sdt - 1e-9;
  return r;
}

// ---------------------------------------------------------------------------
// tape builders
// ---------------------------------------------------------------------------

namespace {

std::vector<int> tile_labels(const std::vector<int>& labels, index_t steps) {
  std::vector<int> tiled;
  tiled.reserve(labels.size() * static_cast<std::size_t>(steps));
  for (index_t t = 0; t < steps; ++t) tiled.insert(tiled.end(), labels.begin(), labels.end());
  return tiled;
}

index_t batch_of(Tape& tape, Var stacked_logits, index_t steps) {
  const Tensor& lv = tape.value(stacked_logits);
  if (lv.ndim() != 2 || steps < 1 || lv.dim(0) % steps != 0) {
    throw std::invalid_argument("loss: logits " + shape_str(lv.shape()) +
                                " not divisible into T=" + std::to_string(steps) + " blocks");
  }
  return lv.dim(0) / steps;
}

}  // namespace

Var tape_loss_sdt(Tape& tape, Var stacked_logits, index_t steps, const std::vector<int>& labels) {
  const index_t n = batch_of(tape, stacked_logits, steps);
  const index_t k = tape.value(stacked_logits).dim(1);
  // Row blocks are t-major, so (T, N*K) averaged over axis 0 is O_mean.
  Var grouped = tape.reshape(stacked_logits, {steps, n * k});
  Var mean = tape.reshape(tape.reduce_mean(grouped, {0}, false), {n, k});
  return tape.softmax_cross_entropy(mean, labels);
}

Var tape_loss_tet(Tape& tape, Var stacked_logits, index_t steps, const std::vector<int>& labels) {
  const index_t n = batch_of(tape, stacked_logits, steps);
  if (static_cast<index_t>(labels.size()) != n) {
    throw std::invalid_argument("loss: expected " + std::to_string(n) + " labels, got " +
                                std::to_string(labels.size()));
  }
  // Uniform weights make the mean over all T*N rows equal the mean over t of
  // per-step batch cross-entropies.
  return tape.softmax_cross_entropy(stacked_logits, tile_labels(labels, steps));
}

Var tape_loss_mse(Tape& tape, Var stacked_logits, index_t steps, const std::vector<int>& labels,
                  index_t num_classes, double phi, MseTarget target) {
  const index_t n = batch_of(tape, stacked_logits, steps);
  if (static_cast<index_t>(labels.size()) != n) {
    throw std::invalid_argument("loss: expected " + std::to_string(n) + " labels, got " +
                                std::to_string(labels.size()));
  }
  Tensor tgt({steps * n, num_classes});
  for (index_t t = 0; t < steps; ++t) {
    for (index_t i = 0; i < n; ++i) {
      for (index_t j = 0; j < num_classes; ++j) {
        tgt[(t * n + i) * num_classes + j] =
            target_at(target, phi, j == labels[static_cast<std::size_t>(i)]);
      }
    }
  }
  Var diff = tape.sub(stacked_logits, tape.leaf(std::move(tgt)));
  return tape.reduce_mean(tape.square(diff), {0, 1}, false);
}

Var tape_loss(Tape& tape, Var stacked_logits, index_t steps, const std::vector<int>& labels,
              index_t num_classes, const LossSpec& spec) {
  if (spec.kind == LossKind::kSdt) {
    return tape_loss_sdt(tape, stacked_logits, steps, labels);
  }
  Var ce = tape_loss_tet(tape, stacked_logits, steps, labels);
  if (spec.lambda == 0.0) return ce;
  if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0)) {
    throw std::invalid_argument("loss: lambda must be in [0,1]");
  }
  Var mse = tape_loss_mse(tape, stacked_logits, steps, labels, num_classes, spec.phi,
                          spec.mse_target);
  return tape.add(tape.scale(ce, 1.0 - spec.lambda), tape.scale(mse, spec.lambda));
}

}  // namespace spiketrain
