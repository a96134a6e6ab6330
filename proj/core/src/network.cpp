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

#include "spiketrain/network.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "spiketrain/rng.hpp"

namespace spiketrain {

namespace {

struct SpatialDims {
  index_t c, h, w;
};

SpatialDims trace_dims(const ArchSpec& arch, index_t c, index_t h, index_t w) {
  SpatialDims d{c, h, w};
  for (const LayerDesc& l : arch.layers) {
    switch (l.kind) {
      case LayerDesc::Kind::kConv:
        d.c = l.channels;  // same padding keeps h, w
        break;
      case LayerDesc::Kind::kAvgPool:
        d.h /= l.kernel;
        d.w /= l.kernel;
        if (d.h < 1 || d.w < 1) {
          throw std::invalid_argument("arch pools " + arch.to_string() +
                                      " below 1x1 for this input size");
        }
        break;
      case LayerDesc::Kind::kFc:
        break;
    }
  }
  return d;
}

}  // namespace

Model build_model(const ArchSpec& arch, const LifConfig& lif, index_t in_channels, index_t in_h,
                  index_t in_w, index_t num_classes, std::uint64_t seed) {
  lif.validate();
  if (num_classes < 2) throw std::invalid_argument("build_model: need at least two classes");

  Model m;
  m.arch = arch;
  m.lif = lif;
  m.in_channels = in_channels;
  m.in_h = in_h;
  m.in_w = in_w;
  m.num_classes = num_classes;

  Rng rng = Rng::derive(seed, {rng_tag::kWeights});
  index_t c = in_channels;
  for (const LayerDesc& l : arch.layers) {
    if (l.kind != LayerDesc::Kind::kConv) continue;
    ConvBlock blk;
    const index_t fan_in = c * l.kernel * l.kernel;
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    blk.w = Tensor({l.channels, c, l.kernel, l.kernel});
    for (index_t i = 0; i < blk.w.numel(); ++i) blk.w[i] = rng.normal(0.0, stddev);
    blk.b = Tensor({l.channels});
    blk.bn.gamma = Tensor::full({l.channels}, lif.v_th);
    blk.bn.beta = Tensor({l.channels});
    blk.bn.running_mean = Tensor({l.channels});
    blk.bn.running_var = Tensor::full({l.channels}, 1.0);
    m.convs.push_back(std::move(blk));
    c = l.channels;
  }

  const SpatialDims out = trace_dims(arch, in_channels, in_h, in_w);
  const index_t features = out.c * out.h * out.w;
  const double stddev = std::sqrt(2.0 / static_cast<double>(features));
  m.fc_w = Tensor({features, num_classes});
  for (index_t i = 0; i < m.fc_w.numel(); ++i) m.fc_w[i] = rng.normal(0.0, stddev);
  m.fc_b = Tensor({num_classes});
  return m;
}

Tensor replicate_frames(const Tensor& frames, index_t steps) {
  if (frames.ndim() != 4) {
    throw std::invalid_argument("replicate_frames: expected (N,C,H,W), got " +
                                shape_str(frames.shape()));
  }
  if (steps < 1) throw std::invalid_argument("replicate_frames: steps must be >= 1");
  std::vector<index_t> shape = frames.shape();
  shape[0] *= steps;
  Tensor out(shape);
  for (index_t t = 0; t < steps; ++t) {
    std::copy(frames.data(), frames.data() + frames.numel(), out.data() + t * frames.numel());
  }
  return out;
}

Var tdbn_forward(Tape& tape, Var x, Var gamma, Var beta, TdbnParams& params, bool training,
                 bool update_running_stats) {
  const Tensor& xv = tape.value(x);
  if (xv.ndim() != 4) {
    throw std::invalid_argument("tdbn: expected 4-d stack, got " + shape_str(xv.shape()));
  }
  const index_t channels = xv.dim(1);
  if (channels != params.gamma.numel()) {
    throw std::invalid_argument("tdbn: channel mismatch, input has " + std::to_string(channels) +
                                ", params have " + std::to_string(params.gamma.numel()));
  }
  const std::vector<index_t> full = xv.shape();
  const std::vector<index_t> cshape = {1, channels, 1, 1};

  Var xhat;
  if (training) {
    Var mean = tape.reduce_mean(x, {0, 2, 3}, /*keepdims=*/true);       // (1,C,1,1)
    Var centered = tape.sub(x, tape.broadcast(mean, full));
    Var var = tape.reduce_mean(tape.square(centered), {0, 2, 3}, true); // biased
    Var inv_std = tape.custom_unary(
        tape.add_scalar(var, params.eps), [](double v) { return 1.0 / std::sqrt(v); },
        [](double, double y) { return -0.5 * y * y * y; });
    xhat = tape.mul(centered, tape.broadcast(inv_std, full));

    if (update_running_stats) {
      const Tensor& m = tape.value(mean);
      const Tensor& v = tape.value(var);
      for (index_t i = 0; i < channels; ++i) {
        params.running_mean[i] =
            (1.0 - params.momentum) * params.running_mean[i] + params.momentum * m[i];
        params.running_var[i] =
            (1.0 - params.momentum) * params.running_var[i] + params.momentum * v[i];
      }
    }
  } else {
    Tensor inv(cshape);
    Tensor mean(cshape);
    for (index_t i = 0; i < channels; ++i) {
      mean[i] = params.running_mean[i];
      inv[i] = 1.0 / std::sqrt(params.running_var[i] + params.eps);
    }
    Var centered = tape.sub(x, tape.broadcast(tape.leaf(std::move(mean)), full));
    xhat = tape.mul(centered, tape.broadcast(tape.leaf(std::move(inv)), full));
  }

  Var g = tape.broadcast(tape.reshape(gamma, cshape), full);
  Var b = tape.broadcast(tape.reshape(beta, cshape), full);
  return tape.add(tape.mul(xhat, g), b);
}

ForwardResult forward(Tape& tape, Model& model, const Tensor& stacked_input, index_t steps,
                      const ForwardOptions& opts) {
  if (stacked_input.ndim() != 4) {
    throw std::invalid_argument("forward: expected (T*N,C,H,W), got " +
                                shape_str(stacked_input.shape()));
  }
  if (steps < 1 || stacked_input.dim(0) % steps != 0) {
    throw std::invalid_argument("forward: row count " + std::to_string(stacked_input.dim(0)) +
                                " is not a multiple of T=" + std::to_string(steps));
  }
  if (stacked_input.dim(1) != model.in_channels || stacked_input.dim(2) != model.in_h ||
      stacked_input.dim(3) != model.in_w) {
    throw std::invalid_argument("forward: input " + shape_str(stacked_input.shape()) +
                                " does not match model input (" +
                                std::to_string(model.in_channels) + "," +
                                std::to_string(model.in_h) + "," + std::to_string(model.in_w) +
                                ")");
  }

  ForwardResult res;
  auto bind = [&](const std::string& name, Tensor& host) {
    Var leaf = tape.leaf(host, /*is_param=*/true);
    res.params.push_back({name, &host, leaf});
    return leaf;
  };

  Var x = tape.leaf(stacked_input);
  std::size_t conv_idx = 0;
  for (const LayerDesc& l : model.arch.layers) {
    switch (l.kind) {
      case LayerDesc::Kind::kConv: {
        ConvBlock& blk = model.convs[conv_idx];
        const std::string pname = "conv" + std::to_string(conv_idx);
        if (opts.record_layer_inputs) res.layer_inputs.push_back(tape.value(x));
        Var w = bind(pname + ".w", blk.w);
        const int pad = static_cast<int>((l.kernel - 1) / 2);
        x = tape.conv2d(x, w, pad);
        const std::vector<index_t> full = tape.value(x).shape();
        if (blk.folded) {
          // The conv bias only exists post-fold; pre-fold it would be erased
          // by the mean subtraction and would carry an exactly-zero gradient.
          Var b = bind(pname + ".b", blk.b);
          x = tape.add(x, tape.broadcast(tape.reshape(b, {1, l.channels, 1, 1}), full));
        } else {
          Var g = bind(pname + ".bn.gamma", blk.bn.gamma);
          Var be = bind(pname + ".bn.beta", blk.bn.beta);
          x = tdbn_forward(tape, x, g, be, blk.bn, opts.training, opts.update_running_stats);
        }
        x = lif_unroll(tape, x, steps, model.lif);
        ++conv_idx;
        break;
      }
      case LayerDesc::Kind::kAvgPool: {
        x = tape.avg_pool(x, static_cast<int>(l.kernel));
        break;
      }
      case LayerDesc::Kind::kFc: {
        const Tensor& xv = tape.value(x);
        const index_t rows = xv.dim(0);
        const index_t features = xv.numel() / rows;
        x = tape.reshape(x, {rows, features});
        if (opts.record_layer_inputs) res.layer_inputs.push_back(tape.value(x));
        if (features != model.fc_w.dim(0)) {
          throw std::invalid_argument("forward: readout expects " +
                                      std::to_string(model.fc_w.dim(0)) + " features, got " +
                                      std::to_string(features));
        }
        Var w = bind("fc.w", model.fc_w);
        Var b = bind("fc.b", model.fc_b);
        x = tape.matmul(x, w);
        x = tape.add(x, tape.broadcast(tape.reshape(b, {1, model.num_classes}),
                                       {rows, model.num_classes}));
        break;
      }
    }
  }

  res.stacked_logits = x;

  // Per-step readout values O(t); the readout layer integrates with no decay
  // or firing, so each block of rows is already that step's output.
  const Tensor& logits = tape.value(res.stacked_logits);
  const index_t batch = logits.dim(0) / steps;
  const index_t k = logits.dim(1);
  res.outputs.reserve(static_cast<std::size_t>(steps));
  for (index_t t = 0; t < steps; ++t) {
    Tensor o({batch, k});
    std::copy(logits.data() + t * batch * k, logits.data() + (t + 1) * batch * k, o.data());
    res.outputs.push_back(std::move(o));
  }
  return res;
}

Model fold_bn(const Model& model) {
  Model folded = model;
  for (ConvBlock& blk : folded.convs) {
    if (blk.folded) continue;
    const index_t f = blk.w.dim(0);
    const index_t per_filter = blk.w.numel() / f;
    for (index_t i = 0; i < f; ++i) {
      const double alpha = std::sqrt(blk.bn.running_var[i] + blk.bn.eps);
      if (!(alpha > 0.0)) {
        throw std::invalid_argument("fold_bn: non-positive standard deviation at channel " +
                                    std::to_string(i));
      }
      const double s = blk.bn.gamma[i] / alpha;
      for (index_t j = 0; j < per_filter; ++j) blk.w[i * per_filter + j] *= s;
      blk.b[i] = blk.bn.beta[i] + (blk.b[i] - blk.bn.running_mean[i]) * s;
    }
    blk.folded = true;
  }
  return folded;
}

// ---------------------------------------------------------------------------
// checkpoint container
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'T', 'C', 'K', 'P', 'T', '0', '1'};

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod(os, static_cast<std::uint64_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  std::uint64_t n = 0;
  read_pod(is, n);
  if (n > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
  std::string s(static_cast<std::size_t>(n), '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

void write_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  write_string(os, name);
  write_pod(os, static_cast<std::uint32_t>(t.ndim()));
  for (index_t d : t.shape()) write_pod(os, static_cast<std::int64_t>(d));
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.numel() * static_cast<index_t>(sizeof(double))));
}

std::pair<std::string, Tensor> read_tensor(std::istream& is) {
  std::string name = read_string(is);
  std::uint32_t ndim = 0;
  read_pod(is, ndim);
  if (ndim > 8) throw std::runtime_error("checkpoint: implausible rank");
  std::vector<index_t> shape(ndim);
  for (std::uint32_t i = 0; i < ndim; ++i) {
    std::int64_t d = 0;
    read_pod(is, d);
    shape[i] = d;
  }
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * static_cast<index_t>(sizeof(double))));
  if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
  return {std::move(name), std::move(t)};
}

}  // namespace

void save_model(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, static_cast<std::uint32_t>(1));  // version
  write_string(os, model.arch.to_string());
  write_pod(os, model.lif.tau);
  write_pod(os, model.lif.v_th);
  write_pod(os, model.lif.gamma_sg);
  write_pod(os, static_cast<std::uint32_t>(model.lif.activation));
  write_pod(os, model.lif.sigmoid_k);
  write_pod(os, static_cast<std::uint8_t>(model.lif.detach_reset ? 1 : 0));
  write_pod(os, static_cast<std::int64_t>(model.in_channels));
  write_pod(os, static_cast<std::int64_t>(model.in_h));
  write_pod(os, static_cast<std::int64_t>(model.in_w));
  write_pod(os, static_cast<std::int64_t>(model.num_classes));

  std::uint64_t count = 2;  // fc.w, fc.b
  for (const ConvBlock& blk : model.convs) count += blk.folded ? 2 : 6;
  write_pod(os, count);
  std::uint64_t folded_mask = 0;
  for (std::size_t i = 0; i < model.convs.size(); ++i) {
    if (model.convs[i].folded) folded_mask |= (1ULL << i);
  }
  write_pod(os, folded_mask);

  for (std::size_t i = 0; i < model.convs.size(); ++i) {
    const ConvBlock& blk = model.convs[i];
    const std::string p = "conv" + std::to_string(i);
    write_tensor(os, p + ".w", blk.w);
    write_tensor(os, p + ".b", blk.b);
    if (!blk.folded) {
      write_tensor(os, p + ".bn.gamma", blk.bn.gamma);
      write_tensor(os, p + ".bn.beta", blk.bn.beta);
      write_tensor(os, p + ".bn.running_mean", blk.bn.running_mean);
      write_tensor(os, p + ".bn.running_var", blk.bn.running_var);
    }
  }
  write_tensor(os, "fc.w", model.fc_w);
  write_tensor(os, "fc.b", model.fc_b);
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Model load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8] = {};
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  std::uint32_t version = 0;
  read_pod(is, version);
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");

  Model m;
  m.arch = parse_arch(read_string(is));
  read_pod(is, m.lif.tau);
  read_pod(is, m.lif.v_th);
  read_pod(is, m.lif.gamma_sg);
  std::uint32_t act = 0;
  read_pod(is, act);
  m.lif.activation = static_cast<ActivationMode>(act);
  read_pod(is, m.lif.sigmoid_k);
  std::uint8_t detach = 0;
  read_pod(is, detach);
  m.lif.detach_reset = detach != 0;
  std::int64_t v = 0;
  read_pod(is, v);
  m.in_channels = v;
  read_pod(is, v);
  m.in_h = v;
  read_pod(is, v);
  m.in_w = v;
  read_pod(is, v);
  m.num_classes = v;

  std::uint64_t count = 0;
  read_pod(is, count);
  std::uint64_t folded_mask = 0;
  read_pod(is, folded_mask);

  std::map<std::string, Tensor> table;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto [name, t] = read_tensor(is);
    table.emplace(std::move(name), std::move(t));
  }

  auto take = [&](const std::string& name) {
    auto it = table.find(name);
    if (it == table.end()) throw std::runtime_error("checkpoint: missing tensor " + name);
    Tensor t = std::move(it->second);
    table.erase(it);
    return t;
  };

  const std::size_t num_convs = m.arch.conv_count();
  for (std::size_t i = 0; i < num_convs; ++i) {
    const std::string p = "conv" + std::to_string(i);
    ConvBlock blk;
    blk.folded = (folded_mask & (1ULL << i)) != 0;
    blk.w = take(p + ".w");
    blk.b = take(p + ".b");
    if (!blk.folded) {
      blk.bn.gamma = take(p + ".bn.gamma");
      blk.bn.beta = take(p + ".bn.beta");
      blk.bn.running_mean = take(p + ".bn.running_mean");
      blk.bn.running_var = take(p + ".bn.running_var");
    }
    m.convs.push_back(std::move(blk));
  }
  m.fc_w = take("fc.w");
  m.fc_b = take("fc.b");
  if (!table.empty()) {
    throw std::runtime_error("checkpoint: unexpected tensor " + table.begin()->first);
  }
  return m;
}

}  // namespace spiketrain
