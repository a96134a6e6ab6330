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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spiketrain/tensor.hpp"

namespace spiketrain {

/// A labelled image set; frames are (N, C, H, W).
struct LabeledFrames {
  Tensor frames;
  std::vector<int> labels;
  index_t num_classes = 0;

  index_t count() const { return frames.empty() ? 0 : frames.dim(0); }
  /// Copies one sample as a (1, C, H, W) tensor.
  Tensor sample(index_t i) const;
  /// Gathers samples at `indices` into a contiguous batch.
  LabeledFrames gather(const std::vector<index_t>& indices) const;
};

/// CIFAR-10 binary batch files: 3073-byte records, one label byte followed by
/// 3072 pixel bytes in planar R,G,B order, 32x32 each.
struct Cifar10Options {
  /// Keep only these classes (labels are re-indexed in the given order).
  std::vector<int> class_subset;
  /// Per-channel standardization after the /255 scaling.
  bool standardize = true;
};

struct Cifar10Data {
  LabeledFrames train;
  LabeledFrames test;
};

/// Reads data_batch_1..5.bin and test_batch.bin from `dir`.
Cifar10Data load_cifar10(const std::string& dir, const Cifar10Options& opts = {});
/// Reads a single batch file (any record count).
LabeledFrames load_cifar10_file(const std::string& path, const Cifar10Options& opts = {});

struct SyntheticOptions {
  index_t num_classes = 2;
  index_t samples_per_class = 64;
  index_t size = 16;  // square side
  index_t channels = 1;
  double noise = 0.5;  // stddev of added Gaussian noise, clamped back to [0,1]
  std::uint64_t seed = 1;
};

/// Class-conditional fixed templates plus seeded noise; trivially separable
/// at noise 0. Templates depend only on (seed, class), so train and test sets
/// drawn with different sample seeds share the same class structure.
LabeledFrames synthetic_patterns(const SyntheticOptions& opts);
/// The noise-free template for one class, (1, C, H, W).
Tensor synthetic_template(const SyntheticOptions& opts, index_t cls);

/// One noise stream drawn over (samples_per_class + test_per_class) samples
/// per class, split into disjoint train and test sets sharing templates.
struct SyntheticSplit {
  LabeledFrames train;
  LabeledFrames test;
};
SyntheticSplit synthetic_patterns_split(const SyntheticOptions& opts, index_t test_per_class);

/// Address-event stream from a DVS-style sensor.
struct Event {
  std::int64_t t_us = 0;
  int x = 0;
  int y = 0;
  int polarity = 0;  // 0 or 1
};

struct EventStream {
  std::vector<Event> events;  // non-decreasing timestamps
  std::int64_t duration_us = 0;
  int width = 0;
  int height = 0;
};

/// Text fixture: one event per line, "t x y p".
EventStream load_event_fixture(const std::string& path, int width, int height);

/// Splits the stream into `steps` equal intervals and accumulates per-pixel,
/// per-polarity event counts: result is (T, 2, H, W). Counts are preserved
/// exactly; events at t == duration fall into the last block.
Tensor accumulate_event_frames(const EventStream& stream, index_t steps);

/// Area-sum downscaling onto a target grid; each source pixel contributes to
/// exactly one target cell, so totals are conserved.
Tensor downscale_sum(const Tensor& frames, index_t target_h, index_t target_w);

struct AugmentOptions {
  double flip_probability = 0.0;  // horizontal mirror
  index_t crop_pad = 0;           // zero-pad then random crop back
  index_t max_roll = 0;           // circular shift, uniform in [-max, max]
};

/// Seeded stochastic transforms, deterministic per (seed, epoch, index).
Tensor augment(const Tensor& frames, const AugmentOptions& opts, std::uint64_t seed,
               index_t epoch, index_t index_base = 0);

/// (N, T, C, H, W) variant: one transform drawn per sample, applied to every
/// step, so a sample's spike train shifts coherently in space.
Tensor augment_temporal(const Tensor& frames, const AugmentOptions& opts, std::uint64_t seed,
                        index_t epoch, index_t index_base = 0);

}  // namespace spiketrain
