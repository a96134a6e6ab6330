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

#include <optional>
#include <string>
#include <vector>

#include "spiketrain/data.hpp"
#include "spiketrain/network.hpp"
#include "spiketrain/objective.hpp"
#include "spiketrain/optim.hpp"

namespace spiketrain {

struct TrainConfig {
  index_t epochs = 20;
  index_t steps = 4;  // unrolled simulation length T
  index_t batch_size = 16;
  LossSpec loss;
  OptimizerConfig optimizer;
  LrSchedule lr_schedule = LrSchedule::kCosineToZero;
  std::uint64_t seed = 1;
  /// Epochs before this one train on the time-averaged CE objective, the
  /// rest on `loss`. unset = train on `loss` throughout.
  std::optional<index_t> loss_switch_epoch;
  AugmentOptions augment;

  void validate() const;
};

/// One metrics-stream row (metrics.csv schema, one row per epoch and split).
struct EpochMetrics {
  index_t epoch = 0;
  std::string split;  // "train" or "test"
  double loss_total = 0.0;
  double loss_tet = 0.0;
  double loss_sdt = 0.0;
  double loss_mse = 0.0;
  double acc_mean_output = 0.0;
  std::vector<double> acc_per_t;  // semicolon-joined in the CSV
  double wall_seconds = 0.0;
};

struct EvalReport {
  double mean_output_accuracy = 0.0;
  std::vector<double> per_timestep_accuracy;
  double per_timestep_variance = 0.0;  // population variance over the list
  double loss_total = 0.0;
  double loss_tet = 0.0;
  double loss_sdt = 0.0;
  double loss_mse = 0.0;
  std::vector<double> per_timestep_ce;
};

struct EpochResult {
  std::vector<double> batch_losses;  // training objective per batch
  double loss_total = 0.0;           // averages over batches
  double loss_tet = 0.0;
  double loss_sdt = 0.0;
  double loss_mse = 0.0;
  double acc_mean_output = 0.0;
  std::vector<double> acc_per_t;
  bool diverged = false;
};

/// One pass over the training set: shuffle, forward over T steps, objective,
/// reverse pass, optimizer update. Deterministic given (cfg.seed, epoch).
/// A non-finite objective aborts the epoch before the offending update, so
/// the model keeps its last finite state.
EpochResult train_epoch(Model& model, const LabeledFrames& train_data, const TrainConfig& cfg,
                        const LossSpec& active_loss, OptimizerState& opt_state, index_t epoch,
                        double lr);

/// Eval-mode pass: classification by argmax of the time-averaged output,
/// plus per-step argmax accuracies and all loss terms. `spec` fixes lambda
/// and phi for the reported total.
EvalReport evaluate(Model& model, const LabeledFrames& data, index_t steps, index_t batch_size,
                    const LossSpec& spec);

struct TrainRunResult {
  std::vector<EpochMetrics> metrics;            // train + test row per epoch
  std::vector<double> epoch_wall_seconds;       // train-pass wall time
  bool diverged = false;
  index_t epochs_run = 0;
  EvalReport final_eval;
};

/// Full training run with per-epoch test evaluation and metrics collection.
TrainRunResult train(Model& model, const LabeledFrames& train_data,
                     const LabeledFrames& test_data, const TrainConfig& cfg);

struct TitPhase {
  std::string name;
  index_t epochs = 0;
  index_t steps = 0;
  double cost_units = 0.0;  // epochs * T, the per-epoch cost model
  double wall_seconds = 0.0;
};

struct TitLedger {
  std::vector<TitPhase> phases;
  double total_cost_units() const;
  double total_wall_seconds() const;
};

struct TitResult {
  TitLedger ledger;
  TrainRunResult initial;
  TrainRunResult finetune;  // empty when the finetune budget is zero
};

/// Two-phase schedule: full budget at a short unrolled length, then the
/// length is raised to the target and training continues briefly at a
/// reduced rate. A zero finetune budget degenerates to plain expansion.
TitResult tit_run(Model& model, const LabeledFrames& train_data, const LabeledFrames& test_data,
                  const TrainConfig& initial_cfg, const TrainConfig& finetune_cfg);

// CSV writers; all floating-point fields use the same %.10g formatting so
// identical runs produce byte-identical files.
void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows,
                       bool include_wall_seconds);
void write_timing_csv(const std::string& path, const std::vector<double>& epoch_seconds);
void write_eval_csv(const std::string& path, const EvalReport& report);
void write_tit_ledger_csv(const std::string& path, const TitLedger& ledger);

/// Builds the (T*N, C, H, W) t-major input stack for the given sample rows.
/// Static 4-d frames are replicated across T; temporal 5-d frames
/// (N, T, C, H, W) must match T exactly.
Tensor stack_batch(const LabeledFrames& data, const std::vector<index_t>& indices, index_t steps);

}  // namespace spiketrain
