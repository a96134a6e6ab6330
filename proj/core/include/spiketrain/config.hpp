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

#include <string>
#include <vector>

#include "spiketrain/data.hpp"
#include "spiketrain/trainer.hpp"

namespace spiketrain {

enum class DatasetKind { kSynthetic, kCifar10, kEventFixture };

/// Flat experiment configuration. Every field has a default; the file format
/// is `key=value` lines (`#` starts a comment) and CLI flags `--key=value`
/// override file entries. Unknown keys are rejected by name.
struct RunConfig {
  // experiment
  std::string arch = kArchTiny;
  DatasetKind dataset = DatasetKind::kSynthetic;
  std::string data_dir;
  std::vector<int> class_subset;  // cifar10 only; empty = all ten
  bool standardize = true;

  // synthetic data
  index_t synthetic_classes = 2;
  index_t synthetic_samples_per_class = 64;
  index_t synthetic_test_per_class = 256;
  index_t synthetic_size = 16;
  index_t synthetic_channels = 1;
  double synthetic_noise = 0.6;
  std::uint64_t synthetic_seed = 7777;

  // event fixtures
  int event_width = 128;
  int event_height = 128;
  index_t event_downscale = 48;  // 0 disables
  double event_test_fraction = 0.1;

  // schedule
  index_t steps = 4;  // key "T"
  index_t epochs = 20;
  index_t batch_size = 16;
  std::uint64_t seed = 1;
  index_t loss_switch_epoch = -1;  // -1 = no switch

  // objective; negative lambda/phi resolve to the dataset default and v_th
  std::string loss = "TET";  // SDT | TET | TOTAL
  double lambda = -1.0;
  double phi = -1.0;
  std::string mse_target = "onehot_phi";  // onehot_phi | uniform_phi

  // optimizer
  std::string optimizer = "adam";  // adam | sgd
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::string lr_schedule = "cosine_to_zero";  // cosine_to_zero | constant

  // neuron
  std::string activation = "heaviside";  // heaviside | sigmoid
  double sigmoid_k = 1.0;
  double tau = 0.5;
  double v_th = 1.0;
  double gamma_sg = 1.0;
  bool detach_reset = false;

  // augmentation
  std::string augment_kind = "none";  // none | flip_crop | roll
  double flip_p = 0.5;
  index_t crop_pad = 4;
  index_t roll_max = 5;

  // outputs
  std::string out_dir = "out";
  std::string checkpoint;  // input checkpoint for evaluate/landscape/energy
  bool timing = false;     // inline wall_seconds into metrics.csv

  // time-inheritance schedule
  index_t tit_initial_T = 2;
  index_t tit_finetune_epochs = -1;  // -1 = epochs/6, the stock 300:50 shape
  double tit_finetune_lr = 1e-4;

  // analysis
  index_t landscape_resolution = 21;
  double landscape_span = 0.5;
  std::uint64_t directions_seed = 1234;
  index_t energy_batch = 16;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  /// Resolves sentinels (lambda, phi, tit budget) and checks invariants.
  void resolve_and_validate();

  LossSpec loss_spec() const;
  LifConfig lif_config() const;
  TrainConfig train_config() const;
  AugmentOptions augment_options() const;
};

/// Parses `path` (may be empty for pure-default config) then applies
/// `overrides`, each "key=value". The result is resolved and validated.
RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Applies one key=value assignment; throws on unknown key or bad value.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

/// Canonical echo of the effective configuration; parsing it back yields an
/// equal RunConfig.
std::string resolved_config_text(const RunConfig& cfg);

struct DatasetSplit {
  LabeledFrames train;
  LabeledFrames test;
};

/// Materializes the configured dataset (synthetic draw, CIFAR-10 binary
/// batches, or an event-fixture directory of "label<k>_*.txt" streams).
DatasetSplit load_dataset(const RunConfig& cfg);

}  // namespace spiketrain
