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

#include "spiketrain/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spiketrain/rng.hpp"

namespace spiketrain {

namespace {

// Standard CIFAR-10 per-channel statistics (of the /255-scaled images).
constexpr double kCifarMean[3] = {0.4914, 0.4822, 0.4465};
constexpr double kCifarStd[3] = {0.2470, 0.2435, 0.2616};

constexpr index_t kCifarSide = 32;
constexpr index_t kCifarPixels = kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + 3 * static_cast<std::size_t>(kCifarPixels);

}  // namespace

Tensor LabeledFrames::sample(index_t i) const {
  if (i < 0 || i >= count()) throw std::out_of_range("sample index out of range");
  std::vector<index_t> shape = frames.shape();
  shape[0] = 1;
  const index_t stride = shape_numel(shape);
  Tensor out(shape);
  std::copy(frames.data() + i * stride, frames.data() + (i + 1) * stride, out.data());
  return out;
}

LabeledFrames LabeledFrames::gather(const std::vector<index_t>& indices) const {
  std::vector<index_t> shape = frames.shape();
  shape[0] = 1;
  const index_t stride = shape_numel(shape);
  shape[0] = static_cast<index_t>(indices.size());
  LabeledFrames out;
  out.frames = Tensor(shape);
  out.labels.reserve(indices.size());
  out.num_classes = num_classes;
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const index_t i = indices[j];
    if (i < 0 || i >= count()) throw std::out_of_range("gather index out of range");
    std::copy(frames.data() + i * stride, frames.data() + (i + 1) * stride,
              out.frames.data() + static_cast<index_t>(j) * stride);
    out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

LabeledFrames load_cifar10_file(const std::string& path, const Cifar10Options& opts) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cifar10: cannot open " + path);
  is.seekg(0, std::ios::end);
  const std::streamoff bytes = is.tellg();
  is.seekg(0, std::ios::beg);
  if (bytes < 0 || bytes % static_cast<std::streamoff>(kCifarRecord) != 0) {
    throw std::runtime_error("cifar10: " + path + " has " + std::to_string(bytes) +
                             " bytes, not a multiple of " + std::to_string(kCifarRecord));
  }
  const index_t records = static_cast<index_t>(bytes / static_cast<std::streamoff>(kCifarRecord));

  int remap[10];
  std::fill(std::begin(remap), std::end(remap), -1);
  if (opts.class_subset.empty()) {
    for (int c = 0; c < 10; ++c) remap[c] = c;
  } else {
    int next = 0;
    for (int c : opts.class_subset) {
      if (c < 0 || c >= 10) throw std::invalid_argument("cifar10: class " + std::to_string(c));
      remap[c] = next++;
    }
  }

  std::vector<unsigned char> record(kCifarRecord);
  std::vector<double> pixels;
  std::vector<int> labels;
  for (index_t r = 0; r < records; ++r) {
    is.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(kCifarRecord));
    if (!is) throw std::runtime_error("cifar10: truncated record in " + path);
    const int label = record[0];
    if (label < 0 || label > 9) {
      throw std::runtime_error("cifar10: label byte " + std::to_string(label) + " in " + path);
    }
    if (remap[label] < 0) continue;
    labels.push_back(remap[label]);
    for (int c = 0; c < 3; ++c) {
      for (index_t p = 0; p < kCifarPixels; ++p) {
        double v = record[1 + static_cast<std::size_t>(c) * kCifarPixels +
                          static_cast<std::size_t>(p)] /
                   255.0;
        if (opts.standardize) v = (v - kCifarMean[c]) / kCifarStd[c];
        pixels.push_back(v);
      }
    }
  }

  LabeledFrames out;
  out.frames = Tensor({static_cast<index_t>(labels.size()), 3, kCifarSide, kCifarSide},
                      std::move(pixels));
  out.labels = std::move(labels);
  out.num_classes =
      opts.class_subset.empty() ? 10 : static_cast<index_t>(opts.class_subset.size());
  return out;
}

Cifar10Data load_cifar10(const std::string& dir, const Cifar10Options& opts) {
  Cifar10Data data;
  std::vector<LabeledFrames> parts;
  index_t total = 0;
  for (int i = 1; i <= 5; ++i) {
    parts.push_back(load_cifar10_file(dir + "/data_batch_" + std::to_string(i) + ".bin", opts));
    total += parts.back().count();
  }
  std::vector<index_t> shape = parts[0].frames.shape();
  shape[0] = total;
  data.train.frames = Tensor(shape);
  data.train.num_classes = parts[0].num_classes;
  index_t offset = 0;
  for (const LabeledFrames& p : parts) {
    std::copy(p.frames.data(), p.frames.data() + p.frames.numel(),
              data.train.frames.data() + offset);
    offset += p.frames.numel();
    data.train.labels.insert(data.train.labels.end(), p.labels.begin(), p.labels.end());
  }
  data.test = load_cifar10_file(dir + "/test_batch.bin", opts);
  return data;
}

Tensor synthetic_template(const SyntheticOptions& opts, index_t cls) {
  if (cls < 0 || cls >= opts.num_classes) {
    throw std::invalid_argument("synthetic: class out of range");
  }
  Rng rng = Rng::derive(opts.seed, {rng_tag::kData, static_cast<std::uint64_t>(cls)});
  Tensor t({1, opts.channels, opts.size, opts.size});
  for (index_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}

LabeledFrames synthetic_patterns(const SyntheticOptions& opts) {
  if (opts.num_classes < 2 || opts.samples_per_class < 1 || opts.size < 1 || opts.channels < 1) {
    throw std::invalid_argument("synthetic: all extents must be positive, >= 2 classes");
  }
  if (opts.noise < 0.0) throw std::invalid_argument("synthetic: negative noise");

  std::vector<Tensor> templates;
  for (index_t c = 0; c < opts.num_classes; ++c) {
    templates.push_back(synthetic_template(opts, c));
  }

  const index_t n = opts.num_classes * opts.samples_per_class;
  const index_t stride = templates[0].numel();
  LabeledFrames out;
  out.frames = Tensor({n, opts.channels, opts.size, opts.size});
  out.labels.reserve(static_cast<std::size_t>(n));
  out.num_classes = opts.num_classes;

  Rng noise_rng = Rng::derive(opts.seed, {rng_tag::kData, 0x5EEDULL});
  index_t row = 0;
  for (index_t s = 0; s < opts.samples_per_class; ++s) {
    for (index_t c = 0; c < opts.num_classes; ++c) {
      const Tensor& tpl = templates[static_cast<std::size_t>(c)];
      for (index_t i = 0; i < stride; ++i) {
        double v = tpl[i];
        if (opts.noise > 0.0) v += opts.noise * noise_rng.normal();
        out.frames[row * stride + i] = std::clamp(v, 0.0, 1.0);
      }
      out.labels.push_back(static_cast<int>(c));
      ++row;
    }
  }
  return out;
}

SyntheticSplit synthetic_patterns_split(const SyntheticOptions& opts, index_t test_per_class) {
  if (test_per_class < 1) throw std::invalid_argument("synthetic: test_per_class must be >= 1");
  SyntheticOptions all = opts;
  all.samples_per_class = opts.samples_per_class + test_per_class;
  const LabeledFrames full = synthetic_patterns(all);

  // Rows are s-major (sample index outer, class inner), so the first
  // samples_per_class * classes rows form the training side.
  const index_t train_rows = opts.samples_per_class * opts.num_classes;
  std::vector<index_t> train_idx, test_idx;
  for (index_t i = 0; i < full.count(); ++i) {
    (i < train_rows ? train_idx : test_idx).push_back(i);
  }
  SyntheticSplit split;
  split.train = full.gather(train_idx);
  split.test = full.gather(test_idx);
  return split;
}

EventStream load_event_fixture(const std::string& path, int width, int height) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("events: cannot open " + path);
  EventStream stream;
  stream.width = width;
  stream.height = height;
  std::string line;
  std::int64_t last_t = 0;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Event e;
    if (!(ss >> e.t_us >> e.x >> e.y >> e.polarity)) {
      throw std::runtime_error("events: malformed line " + std::to_string(line_no) + " in " +
                               path);
    }
    if (e.t_us < last_t) {
      throw std::runtime_error("events: timestamps decrease at line " + std::to_string(line_no));
    }
    if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height || (e.polarity != 0 && e.polarity != 1)) {
      throw std::runtime_error("events: out-of-range event at line " + std::to_string(line_no));
    }
    last_t = e.t_us;
    stream.events.push_back(e);
  }
  stream.duration_us = stream.events.empty() ? 0 : last_t;
  return stream;
}

Tensor accumulate_event_frames(const EventStream& stream, index_t steps) {
  if (steps < 1) throw std::invalid_argument("events: steps must be >= 1");
  if (stream.width < 1 || stream.height < 1) {
    throw std::invalid_argument("events: sensor size must be positive");
  }
  const index_t h = stream.height, w = stream.width;
  Tensor frames({steps, 2, h, w});
  if (stream.events.empty()) return frames;  // valid: all-zero

  const double duration = static_cast<double>(std::max<std::int64_t>(stream.duration_us, 1));
  for (const Event& e : stream.events) {
    index_t block = static_cast<index_t>(static_cast<double>(e.t_us) * static_cast<double>(steps) /
                                         duration);
    block = std::clamp<index_t>(block, 0, steps - 1);
    const index_t idx = ((block * 2 + e.polarity) * h + e.y) * w + e.x;
    frames[idx] += 1.0;
  }
  return frames;
}

Tensor downscale_sum(const Tensor& frames, index_t target_h, index_t target_w) {
  if (frames.ndim() != 4) {
    throw std::invalid_argument("downscale: expected 4-d frames, got " +
                                shape_str(frames.shape()));
  }
  const index_t n = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  if (target_h < 1 || target_h > h || target_w < 1 || target_w > w) {
    throw std::invalid_argument("downscale: target exceeds source dims");
  }
  Tensor out({n, c, target_h, target_w});
  // Each source pixel maps to floor(y * target / source); block boundaries
  // follow the integer grid so every pixel lands in exactly one cell.
  for (index_t in = 0; in < n; ++in) {
    for (index_t ic = 0; ic < c; ++ic) {
      for (index_t y = 0; y < h; ++y) {
        const index_t ty = y * target_h / h;
        for (index_t x = 0; x < w; ++x) {
          const index_t tx = x * target_w / w;
          out[((in * c + ic) * target_h + ty) * target_w + tx] +=
              frames[((in * c + ic) * h + y) * w + x];
        }
      }
    }
  }
  return out;
}

namespace {

struct DrawnTransform {
  bool flip = false;
  index_t crop_dy = 0, crop_dx = 0;
  index_t roll_dy = 0, roll_dx = 0;
};

void check_augment_bounds(const AugmentOptions& opts, index_t h, index_t w) {
  if (opts.crop_pad < 0 || (opts.crop_pad != 0 && (opts.crop_pad >= h || opts.crop_pad >= w))) {
    throw std::invalid_argument("augment: crop_pad exceeds frame dims");
  }
  if (opts.max_roll < 0 || (opts.max_roll != 0 && (opts.max_roll >= h || opts.max_roll >= w))) {
    throw std::invalid_argument("augment: max_roll exceeds frame dims");
  }
}

DrawnTransform draw_transform(Rng& rng, const AugmentOptions& opts) {
  DrawnTransform t;
  if (opts.flip_probability > 0.0) t.flip = rng.bernoulli(opts.flip_probability);
  if (opts.crop_pad > 0) {
    t.crop_dy = rng.uniform_int(-opts.crop_pad, opts.crop_pad);
    t.crop_dx = rng.uniform_int(-opts.crop_pad, opts.crop_pad);
  }
  if (opts.max_roll > 0) {
    t.roll_dy = rng.uniform_int(-opts.max_roll, opts.max_roll);
    t.roll_dx = rng.uniform_int(-opts.max_roll, opts.max_roll);
  }
  return t;
}

// In-place transform of one (C,H,W) slab: mirror, then zero-fill translation
// (pad + crop), then circular roll.
void apply_transform(double* slab, index_t c, index_t h, index_t w, const AugmentOptions& opts,
                     const DrawnTransform& t, std::vector<double>& scratch) {
  if (t.flip) {
    for (index_t ic = 0; ic < c; ++ic) {
      for (index_t y = 0; y < h; ++y) {
        double* row = slab + (ic * h + y) * w;
        std::reverse(row, row + w);
      }
    }
  }
  if (opts.crop_pad > 0) {
    scratch.assign(static_cast<std::size_t>(c * h * w), 0.0);
    for (index_t ic = 0; ic < c; ++ic) {
      for (index_t y = 0; y < h; ++y) {
        const index_t sy = y + t.crop_dy;
        if (sy < 0 || sy >= h) continue;
        for (index_t x = 0; x < w; ++x) {
          const index_t sx = x + t.crop_dx;
          if (sx < 0 || sx >= w) continue;
          scratch[static_cast<std::size_t>((ic * h + y) * w + x)] = slab[(ic * h + sy) * w + sx];
        }
      }
    }
    std::copy(scratch.begin(), scratch.end(), slab);
  }
  if (opts.max_roll > 0) {
    scratch.resize(static_cast<std::size_t>(c * h * w));
    for (index_t ic = 0; ic < c; ++ic) {
      for (index_t y = 0; y < h; ++y) {
        const index_t sy = ((y - t.roll_dy) % h + h) % h;
        for (index_t x = 0; x < w; ++x) {
          const index_t sx = ((x - t.roll_dx) % w + w) % w;
          scratch[static_cast<std::size_t>((ic * h + y) * w + x)] = slab[(ic * h + sy) * w + sx];
        }
      }
    }
    std::copy(scratch.begin(), scratch.end(), slab);
  }
}

}  // namespace

Tensor augment(const Tensor& frames, const AugmentOptions& opts, std::uint64_t seed,
               index_t epoch, index_t index_base) {
  if (frames.ndim() != 4) {
    throw std::invalid_argument("augment: expected (N,C,H,W), got " + shape_str(frames.shape()));
  }
  const index_t n = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  check_augment_bounds(opts, h, w);

  Tensor out = frames;
  std::vector<double> scratch;
  for (index_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, {rng_tag::kAugment, static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(index_base + i)});
    const DrawnTransform t = draw_transform(rng, opts);
    apply_transform(out.data() + i * c * h * w, c, h, w, opts, t, scratch);
  }
  return out;
}

Tensor augment_temporal(const Tensor& frames, const AugmentOptions& opts, std::uint64_t seed,
                        index_t epoch, index_t index_base) {
  if (frames.ndim() != 5) {
    throw std::invalid_argument("augment_temporal: expected (N,T,C,H,W), got " +
                                shape_str(frames.shape()));
  }
  const index_t n = frames.dim(0), steps = frames.dim(1), c = frames.dim(2), h = frames.dim(3),
                w = frames.dim(4);
  check_augment_bounds(opts, h, w);

  Tensor out = frames;
  std::vector<double> scratch;
  for (index_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, {rng_tag::kAugment, static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(index_base + i)});
    const DrawnTransform t = draw_transform(rng, opts);
    for (index_t ts = 0; ts < steps; ++ts) {
      apply_transform(out.data() + (i * steps + ts) * c * h * w, c, h, w, opts, t, scratch);
    }
  }
  return out;
}

}  // namespace spiketrain
