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

#include "spiketrain/tape.hpp"
#include "spiketrain/tensor.hpp"

namespace spiketrain {

enum class LossKind { kSdt, kTet, kTotal };

enum class MseTarget {
  kOnehotPhi,   // phi at the true class, 0 elsewhere
  kUniformPhi,  // phi at every logit
};

struct LossSpec {
  LossKind kind = LossKind::kTet;
  double lambda = 0.05;  // weight of the squared-error regularizer
  double phi = 1.0;      // regularizer target level; defaults to v_th
  MseTarget mse_target = MseTarget::kOnehotPhi;
};

struct LossBreakdown {
  double total = 0.0;
  double ce_term = 0.0;   // the cross-entropy part the active kind uses
  double mse_term = 0.0;
  std::vector<double> per_timestep_ce;
};

// Pure value-level losses over a per-step output sequence O(t), each (N, K),
// with one label per batch row. These are the reporting/oracle route; the
// tape builders below are the training route, and tests hold the two equal.

/// Cross-entropy of the time-averaged output.
double loss_sdt(const std::vector<Tensor>& outputs, const std::vector<int>& labels);

/// Mean over t of per-step cross-entropies.
double loss_tet(const std::vector<Tensor>& outputs, const std::vector<int>& labels);

/// Mean over t of mean squared error against the phi target vector.
double loss_mse(const std::vector<Tensor>& outputs, const std::vector<int>& labels, double phi,
                MseTarget target = MseTarget::kOnehotPhi);

/// (1 - lambda) * ce + lambda * mse, where ce is the TET term for kTet/kTotal
/// and the time-averaged cross-entropy for kSdt (which uses no regularizer).
LossBreakdown loss_total(const std::vector<Tensor>& outputs, const std::vector<int>& labels,
                         const LossSpec& spec);

/// Per-timestep error signals of the two training objectives, shape (N, K)
/// per step: the time-averaged objective emits (1/T)(S(O_mean) - y_onehot)
/// at every step, the per-step objective (1/T)(S(O(t)) - y_onehot).
std::vector<Tensor> analytic_grads(const std::vector<Tensor>& outputs,
                                   const std::vector<int>& labels, LossKind which);

struct Lemma1Result {
  double l_sdt = 0.0;
  double l_tet = 0.0;
  bool holds = false;  // l_tet >= l_sdt - 1e-9
};

/// Executable form of the bound "per-step CE mean >= CE of the mean output".
Lemma1Result lemma1_check(const std::vector<Tensor>& outputs, const std::vector<int>& labels);

// Tape builders used by the trainer. `stacked_logits` is (T*N, K), t-major.

Var tape_loss_sdt(Tape& tape, Var stacked_logits, index_t steps, const std::vector<int>& labels);
Var tape_loss_tet(Tape& tape, Var stacked_logits, index_t steps, const std::vector<int>& labels);
Var tape_loss_mse(Tape& tape, Var stacked_logits, index_t steps, const std::vector<int>& labels,
                  index_t num_classes, double phi, MseTarget target);
/// The active training objective for `spec`.
Var tape_loss(Tape& tape, Var stacked_logits, index_t steps, const std::vector<int>& labels,
              index_t num_classes, const LossSpec& spec);

}  // namespace spiketrain
