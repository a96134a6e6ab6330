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

#include "spiketrain/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "csv_util.hpp"
#include "spiketrain/rng.hpp"

namespace spiketrain {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<int> gather_labels(const LabeledFrames& data, const std::vector<index_t>& indices) {
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (index_t i : indices) labels.push_back(data.labels[static_cast<std::size_t>(i)]);
  return labels;
}

struct AccuracyCounts {
  index_t correct_mean = 0;
  std::vector<index_t> correct_per_t;
  index_t total = 0;
};

index_t argmax_row(const double* row, index_t k) {
  index_t best = 0;
  for (index_t j = 1; j < k; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

void count_accuracy(const std::vector<Tensor>& outputs, const std::vector<int>& labels,
                    AccuracyCounts& counts) {
  const index_t steps = static_cast<index_t>(outputs.size());
  const index_t n = outputs[0].dim(0), k = outputs[0].dim(1);
  if (counts.correct_per_t.empty()) counts.correct_per_t.assign(steps, 0);

  Tensor mean(outputs[0].shape());
  for (const Tensor& o : outputs) {
    for (index_t i = 0; i < o.numel(); ++i) mean[i] += o[i];
  }
  for (index_t i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (argmax_row(mean.data() + i * k, k) == y) ++counts.correct_mean;
    for (index_t t = 0; t < steps; ++t) {
      if (argmax_row(outputs[static_cast<std::size_t>(t)].data() + i * k, k) == y) {
        ++counts.correct_per_t[static_cast<std::size_t>(t)];
      }
    }
  }
  counts.total += n;
}

struct BnSnapshot {
  std::vector<Tensor> mean, var;
};

BnSnapshot snapshot_bn(const Model& model) {
  BnSnapshot s;
  for (const ConvBlock& blk : model.convs) {
    s.mean.push_back(blk.bn.running_mean);
    s.var.push_back(blk.bn.running_var);
  }
  return s;
}

void restore_bn(Model& model, const BnSnapshot& s) {
  for (std::size_t i = 0; i < model.convs.size(); ++i) {
    model.convs[i].bn.running_mean = s.mean[i];
    model.convs[i].bn.running_var = s.var[i];
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (steps < 1) throw std::invalid_argument("train: T must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (loss_switch_epoch && *loss_switch_epoch >= epochs) {
    throw std::invalid_argument("train: loss_switch_epoch must be < epochs");
  }
  optimizer.validate();
}

Tensor stack_batch(const LabeledFrames& data, const std::vector<index_t>& indices,
                   index_t steps) {
  if (data.frames.ndim() == 4) {
    const LabeledFrames batch = data.gather(indices);
    return replicate_frames(batch.frames, steps);
  }
  if (data.frames.ndim() != 5) {
    throw std::invalid_argument("stack_batch: frames must be 4-d or 5-d, got " +
                                shape_str(data.frames.shape()));
  }
  const index_t t_data = data.frames.dim(1);
  if (t_data != steps) {
    throw std::invalid_argument("stack_batch: temporal data built for T=" +
                                std::to_string(t_data) + ", run requested T=" +
                                std::to_string(steps));
  }
  const index_t n = static_cast<index_t>(indices.size());
  const index_t c = data.frames.dim(2), h = data.frames.dim(3), w = data.frames.dim(4);
  const index_t slab = c * h * w;
  Tensor out({steps * n, c, h, w});
  for (index_t t = 0; t < steps; ++t) {
    for (index_t j = 0; j < n; ++j) {
      const index_t src = (indices[static_cast<std::size_t>(j)] * t_data + t) * slab;
      std::copy(data.frames.data() + src, data.frames.data() + src + slab,
                out.data() + (t * n + j) * slab);
    }
  }
  return out;
}

EpochResult train_epoch(Model& model, const LabeledFrames& train_data, const TrainConfig& cfg,
                        const LossSpec& active_loss, OptimizerState& opt_state, index_t epoch,
                        double lr) {
  cfg.validate();
  if (train_data.count() < 1) throw std::invalid_argument("train: empty training set");

  std::vector<index_t> order(static_cast<std::size_t>(train_data.count()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<index_t>(i);
  Rng shuffle_rng = Rng::derive(cfg.seed, {rng_tag::kShuffle, static_cast<std::uint64_t>(epoch)});
  shuffle_rng.shuffle(order);

  const bool use_augment = cfg.augment.flip_probability > 0.0 || cfg.augment.crop_pad > 0 ||
                           cfg.augment.max_roll > 0;

  EpochResult res;
  AccuracyCounts counts;
  double sum_total = 0.0, sum_tet = 0.0, sum_sdt = 0.0, sum_mse = 0.0;
  index_t batches = 0;

  for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
    const std::vector<index_t> indices(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
    const std::vector<int> labels = gather_labels(train_data, indices);

    LabeledFrames batch = train_data.gather(indices);
    if (use_augment) {
      if (batch.frames.ndim() == 4) {
        batch.frames = augment(batch.frames, cfg.augment, cfg.seed, epoch,
                               static_cast<index_t>(begin));
      } else {
        batch.frames = augment_temporal(batch.frames, cfg.augment, cfg.seed, epoch,
                                        static_cast<index_t>(begin));
      }
    }
    std::vector<index_t> rows(indices.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<index_t>(i);
    const Tensor stacked = stack_batch(batch, rows, cfg.steps);

    const BnSnapshot bn_before = snapshot_bn(model);
    Tape tape;
    ForwardOptions fwd;
    fwd.training = true;
    ForwardResult f = forward(tape, model, stacked, cfg.steps, fwd);
    Var loss = tape_loss(tape, f.stacked_logits, cfg.steps, labels, model.num_classes,
                         active_loss);
    const double loss_value = tape.value(loss).item();
    if (!std::isfinite(loss_value)) {
      restore_bn(model, bn_before);  // drop this batch's statistics update too
      res.diverged = true;
      break;
    }

    res.batch_losses.push_back(loss_value);
    const double l_tet = loss_tet(f.outputs, labels);
    const double l_sdt = loss_sdt(f.outputs, labels);
    const double l_mse = loss_mse(f.outputs, labels, active_loss.phi, active_loss.mse_target);
    sum_total += loss_value;
    sum_tet += l_tet;
    sum_sdt += l_sdt;
    sum_mse += l_mse;
    count_accuracy(f.outputs, labels, counts);
    ++batches;

    tape.backward(loss);
    std::vector<Tensor*> params;
    std::vector<Tensor> grads;
    params.reserve(f.params.size());
    grads.reserve(f.params.size());
    for (const BoundParam& p : f.params) {
      params.push_back(p.host);
      grads.push_back(tape.grad(p.leaf));
    }
    optimizer_step(params, grads, opt_state, cfg.optimizer, lr);
  }

  if (batches > 0) {
    const double inv = 1.0 / static_cast<double>(batches);
    res.loss_total = sum_total * inv;
    res.loss_tet = sum_tet * inv;
    res.loss_sdt = sum_sdt * inv;
    res.loss_mse = sum_mse * inv;
    res.acc_mean_output = static_cast<double>(counts.correct_mean) /
                          static_cast<double>(std::max<index_t>(counts.total, 1));
    for (index_t c : counts.correct_per_t) {
      res.acc_per_t.push_back(static_cast<double>(c) /
                              static_cast<double>(std::max<index_t>(counts.total, 1)));
    }
  }
  return res;
}

EvalReport evaluate(Model& model, const LabeledFrames& data, index_t steps, index_t batch_size,
                    const LossSpec& spec) {
  if (steps < 1) throw std::invalid_argument("evaluate: T must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
  if (data.count() < 1) throw std::invalid_argument("evaluate: empty dataset");

  EvalReport rep;
  AccuracyCounts counts;
  double sum_tet = 0.0, sum_sdt = 0.0, sum_mse = 0.0;
  std::vector<double> sum_per_t_ce(static_cast<std::size_t>(steps), 0.0);
  index_t total = 0;

  for (index_t begin = 0; begin < data.count(); begin += batch_size) {
    const index_t end = std::min(data.count(), begin + batch_size);
    std::vector<index_t> indices;
    for (index_t i = begin; i < end; ++i) indices.push_back(i);
    const std::vector<int> labels = gather_labels(data, indices);
    const Tensor stacked = stack_batch(data, indices, steps);

    Tape tape;
    ForwardOptions fwd;  // eval mode: running statistics
    ForwardResult f = forward(tape, model, stacked, steps, fwd);

    const index_t n = end - begin;
    const LossBreakdown bd = loss_total(f.outputs, labels, spec);
    const double w = static_cast<double>(n);
    sum_tet += loss_tet(f.outputs, labels) * w;
    sum_sdt += loss_sdt(f.outputs, labels) * w;
    sum_mse += loss_mse(f.outputs, labels, spec.phi, spec.mse_target) * w;
    for (index_t t = 0; t < steps; ++t) {
      sum_per_t_ce[static_cast<std::size_t>(t)] += bd.per_timestep_ce[static_cast<std::size_t>(t)] * w;
    }
    count_accuracy(f.outputs, labels, counts);
    total += n;
  }

  const double inv = 1.0 / static_cast<double>(total);
  rep.loss_tet = sum_tet * inv;
  rep.loss_sdt = sum_sdt * inv;
  rep.loss_mse = sum_mse * inv;
  rep.loss_total = (spec.kind == LossKind::kSdt)
                       ? rep.loss_sdt
                       : (1.0 - spec.lambda) * rep.loss_tet + spec.lambda * rep.loss_mse;
  for (double s : sum_per_t_ce) rep.per_timestep_ce.push_back(s * inv);

  rep.mean_output_accuracy =
      static_cast<double>(counts.correct_mean) / static_cast<double>(counts.total);
  for (index_t c : counts.correct_per_t) {
    rep.per_timestep_accuracy.push_back(static_cast<double>(c) /
                                        static_cast<double>(counts.total));
  }
  double mean_acc = 0.0;
  for (double a : rep.per_timestep_accuracy) mean_acc += a;
  mean_acc /= static_cast<double>(rep.per_timestep_accuracy.size());
  double var = 0.0;
  for (double a : rep.per_timestep_accuracy) var += (a - mean_acc) * (a - mean_acc);
  rep.per_timestep_variance = var / static_cast<double>(rep.per_timestep_accuracy.size());
  return rep;
}

TrainRunResult train(Model& model, const LabeledFrames& train_data,
                     const LabeledFrames& test_data, const TrainConfig& cfg) {
  cfg.validate();
  TrainRunResult run;
  OptimizerState opt_state;

  for (index_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossSpec active = cfg.loss;
    if (cfg.loss_switch_epoch && epoch < *cfg.loss_switch_epoch) {
      active = LossSpec{};
      active.kind = LossKind::kSdt;
      active.lambda = cfg.loss.lambda;
      active.phi = cfg.loss.phi;
      active.mse_target = cfg.loss.mse_target;
    }
    const double lr = scheduled_lr(cfg.lr_schedule, cfg.optimizer.lr, epoch, cfg.epochs);

    const double t0 = now_seconds();
    EpochResult er = train_epoch(model, train_data, cfg, active, opt_state, epoch, lr);
    const double train_seconds = now_seconds() - t0;
    run.epoch_wall_seconds.push_back(train_seconds);

    EpochMetrics train_row;
    train_row.epoch = epoch;
    train_row.split = "train";
    train_row.loss_total = er.loss_total;
    train_row.loss_tet = er.loss_tet;
    train_row.loss_sdt = er.loss_sdt;
    train_row.loss_mse = er.loss_mse;
    train_row.acc_mean_output = er.acc_mean_output;
    train_row.acc_per_t = er.acc_per_t;
    train_row.wall_seconds = train_seconds;
    run.metrics.push_back(std::move(train_row));

    if (er.diverged) {
      run.diverged = true;
      run.epochs_run = epoch;
      break;
    }

    const double e0 = now_seconds();
    EvalReport ev = evaluate(model, test_data, cfg.steps, cfg.batch_size, active);
    EpochMetrics test_row;
    test_row.epoch = epoch;
    test_row.split = "test";
    test_row.loss_total = ev.loss_total;
    test_row.loss_tet = ev.loss_tet;
    test_row.loss_sdt = ev.loss_sdt;
    test_row.loss_mse = ev.loss_mse;
    test_row.acc_mean_output = ev.mean_output_accuracy;
    test_row.acc_per_t = ev.per_timestep_accuracy;
    test_row.wall_seconds = now_seconds() - e0;
    run.metrics.push_back(std::move(test_row));

    run.epochs_run = epoch + 1;
    if (epoch + 1 == cfg.epochs) run.final_eval = ev;
  }
  return run;
}

double TitLedger::total_cost_units() const {
  double s = 0.0;
  for (const TitPhase& p : phases) s += p.cost_units;
  return s;
}

double TitLedger::total_wall_seconds() const {
  double s = 0.0;
  for (const TitPhase& p : phases) s += p.wall_seconds;
  return s;
}

TitResult tit_run(Model& model, const LabeledFrames& train_data, const LabeledFrames& test_data,
                  const TrainConfig& initial_cfg, const TrainConfig& finetune_cfg) {
  initial_cfg.validate();
  if (finetune_cfg.epochs > 0 && finetune_cfg.steps <= initial_cfg.steps) {
    throw std::invalid_argument("tit: finetune T must exceed the initial T");
  }

  TitResult res;
  const double t0 = now_seconds();
  res.initial = train(model, train_data, test_data, initial_cfg);
  const double initial_seconds = now_seconds() - t0;
  res.ledger.phases.push_back(
      {"initial", initial_cfg.epochs, initial_cfg.steps,
       static_cast<double>(initial_cfg.epochs * initial_cfg.steps), initial_seconds});

  if (finetune_cfg.epochs > 0) {
    // Expansion itself is free: same weights, same normalization statistics,
    // only the unrolled length changes for the finetune phase.
    const double f0 = now_seconds();
    res.finetune = train(model, train_data, test_data, finetune_cfg);
    const double finetune_seconds = now_seconds() - f0;
    res.ledger.phases.push_back(
        {"finetune", finetune_cfg.epochs, finetune_cfg.steps,
         static_cast<double>(finetune_cfg.epochs * finetune_cfg.steps), finetune_seconds});
  }
  return res;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& rows,
                       bool include_wall_seconds) {
  auto os = csv::open_out(path);
  os << "epoch,split,loss_total,loss_tet,loss_sdt,loss_mse,acc_mean_output,acc_per_t,"
        "wall_seconds\n";
  for (const EpochMetrics& r : rows) {
    os << r.epoch << ',' << r.split << ',' << csv::num(r.loss_total) << ','
       << csv::num(r.loss_tet) << ',' << csv::num(r.loss_sdt) << ',' << csv::num(r.loss_mse)
       << ',' << csv::num(r.acc_mean_output) << ',' << csv::join(r.acc_per_t, ';') << ','
       << csv::num(include_wall_seconds ? r.wall_seconds : 0.0) << '\n';
  }
}

void write_timing_csv(const std::string& path, const std::vector<double>& epoch_seconds) {
  auto os = csv::open_out(path);
  os << "epoch,wall_seconds\n";
  for (std::size_t i = 0; i < epoch_seconds.size(); ++i) {
    os << i << ',' << csv::num(epoch_seconds[i]) << '\n';
  }
}

void write_eval_csv(const std::string& path, const EvalReport& report) {
  auto os = csv::open_out(path);
  os << "metric,value\n";
  os << "acc_mean_output," << csv::num(report.mean_output_accuracy) << '\n';
  os << "acc_per_t," << csv::join(report.per_timestep_accuracy, ';') << '\n';
  os << "acc_per_t_variance," << csv::num(report.per_timestep_variance) << '\n';
  os << "loss_total," << csv::num(report.loss_total) << '\n';
  os << "loss_tet," << csv::num(report.loss_tet) << '\n';
  os << "loss_sdt," << csv::num(report.loss_sdt) << '\n';
  os << "loss_mse," << csv::num(report.loss_mse) << '\n';
  os << "ce_per_t," << csv::join(report.per_timestep_ce, ';') << '\n';
}

void write_tit_ledger_csv(const std::string& path, const TitLedger& ledger) {
  auto os = csv::open_out(path);
  os << "phase,epochs,T,cost_units,wall_seconds\n";
  for (const TitPhase& p : ledger.phases) {
    os << p.name << ',' << p.epochs << ',' << p.steps << ',' << csv::num(p.cost_units) << ','
       << csv::num(p.wall_seconds) << '\n';
  }
  os << "total,,," << csv::num(ledger.total_cost_units()) << ','
     << csv::num(ledger.total_wall_seconds()) << '\n';
}

}  // namespace spiketrain
