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

#include "spiketrain/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "spiketrain/rng.hpp"

namespace spiketrain {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw std::invalid_argument("config: key \"" + key + "\" expects " + expected + ", got \"" +
                              value + "\"");
}

std::int64_t to_i64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) bad_value(key, value, "an integer");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || value[0] == '-') {
    bad_value(key, value, "a non-negative integer");
  }
  return v;
}

double to_f64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) bad_value(key, value, "a number");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  bad_value(key, value, "a boolean (true/false)");
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  if (value.empty()) return out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::size_t end = (comma == std::string::npos) ? value.size() : comma;
    out.push_back(static_cast<int>(to_i64(key, value.substr(start, end - start))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

std::string from_int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

struct KeyEntry {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyEntry>& key_table() {
  static const std::vector<KeyEntry> table = {
      {"arch", [](RunConfig& c, const std::string& v) { c.arch = v; },
       [](const RunConfig& c) { return c.arch; }},
      {"dataset",
       [](RunConfig& c, const std::string& v) {
         if (v == "synthetic") {
           c.dataset = DatasetKind::kSynthetic;
         } else if (v == "cifar10") {
           c.dataset = DatasetKind::kCifar10;
         } else if (v == "event_fixture") {
           c.dataset = DatasetKind::kEventFixture;
         } else {
           bad_value("dataset", v, "synthetic, cifar10, or event_fixture");
         }
       },
       [](const RunConfig& c) {
         switch (c.dataset) {
           case DatasetKind::kSynthetic: return std::string("synthetic");
           case DatasetKind::kCifar10: return std::string("cifar10");
           case DatasetKind::kEventFixture: return std::string("event_fixture");
         }
         return std::string("synthetic");
       }},
      {"data_dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; },
       [](const RunConfig& c) { return c.data_dir; }},
      {"class_subset",
       [](RunConfig& c, const std::string& v) { c.class_subset = to_int_list("class_subset", v); },
       [](const RunConfig& c) { return from_int_list(c.class_subset); }},
      {"standardize",
       [](RunConfig& c, const std::string& v) { c.standardize = to_bool("standardize", v); },
       [](const RunConfig& c) { return from_bool(c.standardize); }},

      {"synthetic_classes",
       [](RunConfig& c, const std::string& v) { c.synthetic_classes = to_i64("synthetic_classes", v); },
       [](const RunConfig& c) { return std::to_string(c.synthetic_classes); }},
      {"synthetic_samples_per_class",
       [](RunConfig& c, const std::string& v) {
         c.synthetic_samples_per_class = to_i64("synthetic_samples_per_class", v);
       },
       [](const RunConfig& c) { return std::to_string(c.synthetic_samples_per_class); }},
      {"synthetic_test_per_class",
       [](RunConfig& c, const std::string& v) {
         c.synthetic_test_per_class = to_i64("synthetic_test_per_class", v);
       },
       [](const RunConfig& c) { return std::to_string(c.synthetic_test_per_class); }},
      {"synthetic_size",
       [](RunConfig& c, const std::string& v) { c.synthetic_size = to_i64("synthetic_size", v); },
       [](const RunConfig& c) { return std::to_string(c.synthetic_size); }},
      {"synthetic_channels",
       [](RunConfig& c, const std::string& v) {
         c.synthetic_channels = to_i64("synthetic_channels", v);
       },
       [](const RunConfig& c) { return std::to_string(c.synthetic_channels); }},
      {"synthetic_noise",
       [](RunConfig& c, const std::string& v) { c.synthetic_noise = to_f64("synthetic_noise", v); },
       [](const RunConfig& c) { return num17(c.synthetic_noise); }},
      {"synthetic_seed",
       [](RunConfig& c, const std::string& v) { c.synthetic_seed = to_u64("synthetic_seed", v); },
       [](const RunConfig& c) { return std::to_string(c.synthetic_seed); }},

      {"event_width",
       [](RunConfig& c, const std::string& v) {
         c.event_width = static_cast<int>(to_i64("event_width", v));
       },
       [](const RunConfig& c) { return std::to_string(c.event_width); }},
      {"event_height",
       [](RunConfig& c, const std::string& v) {
         c.event_height = static_cast<int>(to_i64("event_height", v));
       },
       [](const RunConfig& c) { return std::to_string(c.event_height); }},
      {"event_downscale",
       [](RunConfig& c, const std::string& v) { c.event_downscale = to_i64("event_downscale", v); },
       [](const RunConfig& c) { return std::to_string(c.event_downscale); }},
      {"event_test_fraction",
       [](RunConfig& c, const std::string& v) {
         c.event_test_fraction = to_f64("event_test_fraction", v);
       },
       [](const RunConfig& c) { return num17(c.event_test_fraction); }},

      {"T", [](RunConfig& c, const std::string& v) { c.steps = to_i64("T", v); },
       [](const RunConfig& c) { return std::to_string(c.steps); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.epochs = to_i64("epochs", v); },
       [](const RunConfig& c) { return std::to_string(c.epochs); }},
      {"batch_size",
       [](RunConfig& c, const std::string& v) { c.batch_size = to_i64("batch_size", v); },
       [](const RunConfig& c) { return std::to_string(c.batch_size); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"loss_switch_epoch",
       [](RunConfig& c, const std::string& v) {
         c.loss_switch_epoch = to_i64("loss_switch_epoch", v);
       },
       [](const RunConfig& c) { return std::to_string(c.loss_switch_epoch); }},

      {"loss", [](RunConfig& c, const std::string& v) { c.loss = v; },
       [](const RunConfig& c) { return c.loss; }},
      {"lambda", [](RunConfig& c, const std::string& v) { c.lambda = to_f64("lambda", v); },
       [](const RunConfig& c) { return num17(c.lambda); }},
      {"phi", [](RunConfig& c, const std::string& v) { c.phi = to_f64("phi", v); },
       [](const RunConfig& c) { return num17(c.phi); }},
      {"mse_target", [](RunConfig& c, const std::string& v) { c.mse_target = v; },
       [](const RunConfig& c) { return c.mse_target; }},

      {"optimizer", [](RunConfig& c, const std::string& v) { c.optimizer = v; },
       [](const RunConfig& c) { return c.optimizer; }},
      {"lr", [](RunConfig& c, const std::string& v) { c.lr = to_f64("lr", v); },
       [](const RunConfig& c) { return num17(c.lr); }},
      {"beta1", [](RunConfig& c, const std::string& v) { c.beta1 = to_f64("beta1", v); },
       [](const RunConfig& c) { return num17(c.beta1); }},
      {"beta2", [](RunConfig& c, const std::string& v) { c.beta2 = to_f64("beta2", v); },
       [](const RunConfig& c) { return num17(c.beta2); }},
      {"adam_eps", [](RunConfig& c, const std::string& v) { c.adam_eps = to_f64("adam_eps", v); },
       [](const RunConfig& c) { return num17(c.adam_eps); }},
      {"momentum", [](RunConfig& c, const std::string& v) { c.momentum = to_f64("momentum", v); },
       [](const RunConfig& c) { return num17(c.momentum); }},
      {"weight_decay",
       [](RunConfig& c, const std::string& v) { c.weight_decay = to_f64("weight_decay", v); },
       [](const RunConfig& c) { return num17(c.weight_decay); }},
      {"lr_schedule", [](RunConfig& c, const std::string& v) { c.lr_schedule = v; },
       [](const RunConfig& c) { return c.lr_schedule; }},

      {"activation", [](RunConfig& c, const std::string& v) { c.activation = v; },
       [](const RunConfig& c) { return c.activation; }},
      {"sigmoid_k",
       [](RunConfig& c, const std::string& v) { c.sigmoid_k = to_f64("sigmoid_k", v); },
       [](const RunConfig& c) { return num17(c.sigmoid_k); }},
      {"tau", [](RunConfig& c, const std::string& v) { c.tau = to_f64("tau", v); },
       [](const RunConfig& c) { return num17(c.tau); }},
      {"v_th", [](RunConfig& c, const std::string& v) { c.v_th = to_f64("v_th", v); },
       [](const RunConfig& c) { return num17(c.v_th); }},
      {"gamma_sg", [](RunConfig& c, const std::string& v) { c.gamma_sg = to_f64("gamma_sg", v); },
       [](const RunConfig& c) { return num17(c.gamma_sg); }},
      {"detach_reset",
       [](RunConfig& c, const std::string& v) { c.detach_reset = to_bool("detach_reset", v); },
       [](const RunConfig& c) { return from_bool(c.detach_reset); }},

      {"augment", [](RunConfig& c, const std::string& v) { c.augment_kind = v; },
       [](const RunConfig& c) { return c.augment_kind; }},
      {"flip_p", [](RunConfig& c, const std::string& v) { c.flip_p = to_f64("flip_p", v); },
       [](const RunConfig& c) { return num17(c.flip_p); }},
      {"crop_pad", [](RunConfig& c, const std::string& v) { c.crop_pad = to_i64("crop_pad", v); },
       [](const RunConfig& c) { return std::to_string(c.crop_pad); }},
      {"roll_max", [](RunConfig& c, const std::string& v) { c.roll_max = to_i64("roll_max", v); },
       [](const RunConfig& c) { return std::to_string(c.roll_max); }},

      {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
       [](const RunConfig& c) { return c.out_dir; }},
      {"checkpoint", [](RunConfig& c, const std::string& v) { c.checkpoint = v; },
       [](const RunConfig& c) { return c.checkpoint; }},
      {"timing", [](RunConfig& c, const std::string& v) { c.timing = to_bool("timing", v); },
       [](const RunConfig& c) { return from_bool(c.timing); }},

      {"tit_initial_T",
       [](RunConfig& c, const std::string& v) { c.tit_initial_T = to_i64("tit_initial_T", v); },
       [](const RunConfig& c) { return std::to_string(c.tit_initial_T); }},
      {"tit_finetune_epochs",
       [](RunConfig& c, const std::string& v) {
         c.tit_finetune_epochs = to_i64("tit_finetune_epochs", v);
       },
       [](const RunConfig& c) { return std::to_string(c.tit_finetune_epochs); }},
      {"tit_finetune_lr",
       [](RunConfig& c, const std::string& v) { c.tit_finetune_lr = to_f64("tit_finetune_lr", v); },
       [](const RunConfig& c) { return num17(c.tit_finetune_lr); }},

      {"landscape_resolution",
       [](RunConfig& c, const std::string& v) {
         c.landscape_resolution = to_i64("landscape_resolution", v);
       },
       [](const RunConfig& c) { return std::to_string(c.landscape_resolution); }},
      {"landscape_span",
       [](RunConfig& c, const std::string& v) { c.landscape_span = to_f64("landscape_span", v); },
       [](const RunConfig& c) { return num17(c.landscape_span); }},
      {"directions_seed",
       [](RunConfig& c, const std::string& v) { c.directions_seed = to_u64("directions_seed", v); },
       [](const RunConfig& c) { return std::to_string(c.directions_seed); }},
      {"energy_batch",
       [](RunConfig& c, const std::string& v) { c.energy_batch = to_i64("energy_batch", v); },
       [](const RunConfig& c) { return std::to_string(c.energy_batch); }},
  };
  return table;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("config: " + msg);
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const KeyEntry& e : key_table()) {
    if (key == e.name) {
      e.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("config: unknown key \"" + key + "\"");
}

void RunConfig::resolve_and_validate() {
  require(steps >= 1, "T must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(loss == "SDT" || loss == "TET" || loss == "TOTAL",
          "loss must be SDT, TET, or TOTAL");
  require(mse_target == "onehot_phi" || mse_target == "uniform_phi",
          "mse_target must be onehot_phi or uniform_phi");
  require(optimizer == "adam" || optimizer == "sgd", "optimizer must be adam or sgd");
  require(lr_schedule == "cosine_to_zero" || lr_schedule == "constant",
          "lr_schedule must be cosine_to_zero or constant");
  require(activation == "heaviside" || activation == "sigmoid",
          "activation must be heaviside or sigmoid");
  require(augment_kind == "none" || augment_kind == "flip_crop" || augment_kind == "roll",
          "augment must be none, flip_crop, or roll");
  require(loss_switch_epoch == -1 || (loss_switch_epoch >= 0 && loss_switch_epoch < epochs),
          "loss_switch_epoch must be -1 or in [0, epochs)");

  if (lambda < 0.0) lambda = (dataset == DatasetKind::kEventFixture) ? 0.001 : 0.05;
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0,1]");
  if (phi < 0.0) phi = v_th;

  require(synthetic_classes >= 2, "synthetic_classes must be >= 2");
  require(synthetic_samples_per_class >= 1 && synthetic_test_per_class >= 1,
          "synthetic sample counts must be >= 1");
  require(synthetic_size >= 1 && synthetic_channels >= 1, "synthetic dims must be >= 1");
  require(synthetic_noise >= 0.0, "synthetic_noise must be >= 0");
  require(event_width >= 1 && event_height >= 1, "event sensor size must be >= 1");
  require(event_downscale >= 0, "event_downscale must be >= 0");
  require(event_test_fraction > 0.0 && event_test_fraction < 1.0,
          "event_test_fraction must be in (0,1)");

  require(tit_initial_T >= 1, "tit_initial_T must be >= 1");
  if (tit_finetune_epochs < 0) tit_finetune_epochs = std::max<index_t>(1, epochs / 6);
  require(tit_finetune_lr > 0.0, "tit_finetune_lr must be positive");
  require(landscape_resolution >= 1, "landscape_resolution must be >= 1");
  require(landscape_span >= 0.0, "landscape_span must be >= 0");
  require(energy_batch >= 1, "energy_batch must be >= 1");

  lif_config().validate();
  OptimizerConfig oc = train_config().optimizer;
  oc.validate();
  parse_arch(arch);  // shape errors surface at config time
}

LossSpec RunConfig::loss_spec() const {
  LossSpec spec;
  spec.kind = (loss == "SDT") ? LossKind::kSdt : (loss == "TET" ? LossKind::kTet : LossKind::kTotal);
  spec.lambda = lambda < 0.0 ? 0.05 : lambda;
  spec.phi = phi < 0.0 ? v_th : phi;
  spec.mse_target = (mse_target == "uniform_phi") ? MseTarget::kUniformPhi : MseTarget::kOnehotPhi;
  return spec;
}

LifConfig RunConfig::lif_config() const {
  LifConfig lif;
  lif.tau = tau;
  lif.v_th = v_th;
  lif.gamma_sg = gamma_sg;
  lif.activation = (activation == "sigmoid") ? ActivationMode::kSigmoid
                                             : ActivationMode::kHeavisideTriangle;
  lif.sigmoid_k = sigmoid_k;
  lif.detach_reset = detach_reset;
  return lif;
}

AugmentOptions RunConfig::augment_options() const {
  AugmentOptions a;
  if (augment_kind == "flip_crop") {
    a.flip_probability = flip_p;
    a.crop_pad = crop_pad;
  } else if (augment_kind == "roll") {
    a.max_roll = roll_max;
  }
  return a;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.steps = steps;
  t.batch_size = batch_size;
  t.loss = loss_spec();
  t.optimizer.kind = (optimizer == "sgd") ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  t.optimizer.lr = lr;
  t.optimizer.beta1 = beta1;
  t.optimizer.beta2 = beta2;
  t.optimizer.eps = adam_eps;
  t.optimizer.momentum = momentum;
  t.optimizer.weight_decay = weight_decay;
  t.lr_schedule = (lr_schedule == "constant") ? LrSchedule::kConstant : LrSchedule::kCosineToZero;
  t.seed = seed;
  if (loss_switch_epoch >= 0) t.loss_switch_epoch = loss_switch_epoch;
  t.augment = augment_options();
  return t;
}

RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("config: cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                    " is not key=value: \"" + line + "\"");
      }
      apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  for (const std::string& o : overrides) {
    const std::size_t eq = o.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: override is not key=value: \"" + o + "\"");
    }
    apply_config_entry(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  cfg.resolve_and_validate();
  return cfg;
}

std::string resolved_config_text(const RunConfig& cfg) {
  std::string out;
  for (const KeyEntry& e : key_table()) {
    out += e.name;
    out += '=';
    out += e.get(cfg);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// dataset materialization
// ---------------------------------------------------------------------------

DatasetSplit load_dataset(const RunConfig& cfg) {
  DatasetSplit split;
  switch (cfg.dataset) {
    case DatasetKind::kSynthetic: {
      SyntheticOptions opts;
      opts.num_classes = cfg.synthetic_classes;
      opts.samples_per_class = cfg.synthetic_samples_per_class;
      opts.size = cfg.synthetic_size;
      opts.channels = cfg.synthetic_channels;
      opts.noise = cfg.synthetic_noise;
      opts.seed = cfg.synthetic_seed;
      SyntheticSplit s = synthetic_patterns_split(opts, cfg.synthetic_test_per_class);
      split.train = std::move(s.train);
      split.test = std::move(s.test);
      return split;
    }
    case DatasetKind::kCifar10: {
      if (cfg.data_dir.empty()) {
        throw std::runtime_error("data: cifar10 requires data_dir");
      }
      Cifar10Options opts;
      opts.class_subset = cfg.class_subset;
      opts.standardize = cfg.standardize;
      Cifar10Data data = load_cifar10(cfg.data_dir, opts);
      split.train = std::move(data.train);
      split.test = std::move(data.test);
      return split;
    }
    case DatasetKind::kEventFixture: {
      if (cfg.data_dir.empty()) {
        throw std::runtime_error("data: event_fixture requires data_dir");
      }
      std::vector<std::string> files;
      for (const auto& entry : std::filesystem::directory_iterator(cfg.data_dir)) {
        if (entry.path().extension() == ".txt") files.push_back(entry.path().string());
      }
      if (files.empty()) {
        throw std::runtime_error("data: no .txt event fixtures in " + cfg.data_dir);
      }
      std::sort(files.begin(), files.end());

      std::vector<Tensor> samples;
      std::vector<int> labels;
      int max_label = 0;
      for (const std::string& f : files) {
        const std::string stem = std::filesystem::path(f).stem().string();
        if (stem.rfind("label", 0) != 0) {
          throw std::runtime_error("data: event fixture " + f +
                                   " must be named label<k>_*.txt");
        }
        std::size_t digits = 5;
        while (digits < stem.size() && std::isdigit(static_cast<unsigned char>(stem[digits]))) {
          ++digits;
        }
        if (digits == 5) {
          throw std::runtime_error("data: event fixture " + f +
                                   " must be named label<k>_*.txt");
        }
        const int label = std::stoi(stem.substr(5, digits - 5));
        EventStream stream = load_event_fixture(f, cfg.event_width, cfg.event_height);
        Tensor frames = accumulate_event_frames(stream, cfg.steps);  // (T,2,H,W)
        if (cfg.event_downscale > 0 &&
            (cfg.event_downscale < frames.dim(2) || cfg.event_downscale < frames.dim(3))) {
          frames = downscale_sum(frames, cfg.event_downscale, cfg.event_downscale);
        }
        samples.push_back(std::move(frames));
        labels.push_back(label);
        max_label = std::max(max_label, label);
      }

      const index_t n = static_cast<index_t>(samples.size());
      const index_t slab = samples[0].numel();
      Tensor all({n, cfg.steps, samples[0].dim(1), samples[0].dim(2), samples[0].dim(3)});
      for (index_t i = 0; i < n; ++i) {
        std::copy(samples[static_cast<std::size_t>(i)].data(),
                  samples[static_cast<std::size_t>(i)].data() + slab, all.data() + i * slab);
      }
      LabeledFrames full;
      full.frames = std::move(all);
      full.labels = std::move(labels);
      full.num_classes = max_label + 1;

      // Fixed-seed split; the selection rule is the seeded shuffle below.
      std::vector<index_t> order(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<index_t>(i);
      Rng rng = Rng::derive(cfg.synthetic_seed, {rng_tag::kData, 42});
      rng.shuffle(order);
      const index_t test_count = std::max<index_t>(
          1, static_cast<index_t>(std::llround(cfg.event_test_fraction * static_cast<double>(n))));
      std::vector<index_t> test_idx(order.begin(), order.begin() + test_count);
      std::vector<index_t> train_idx(order.begin() + test_count, order.end());
      if (train_idx.empty()) throw std::runtime_error("data: event fixture set too small");
      std::sort(test_idx.begin(), test_idx.end());
      std::sort(train_idx.begin(), train_idx.end());
      split.train = full.gather(train_idx);
      split.test = full.gather(test_idx);
      return split;
    }
  }
  throw std::logic_error("unreachable dataset kind");
}

}  // namespace spiketrain
