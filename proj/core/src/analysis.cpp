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

#include "spiketrain/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "csv_util.hpp"
#include "spiketrain/rng.hpp"

namespace spiketrain {

namespace {

// The perturbable tensors, in fixed order: conv weights then the readout
// weight. Filters are rows of the (F, C*k*k) view for convs and columns
// (per-class vectors) for the (features, classes) readout.
struct PerturbView {
  Tensor* tensor;
  index_t filters;      // number of filter groups
  bool column_major;    // readout: filters run over columns
};

std::vector<PerturbView> perturb_views(Model& model) {
  std::vector<PerturbView> views;
  for (ConvBlock& blk : model.convs) {
    views.push_back({&blk.w, blk.w.dim(0), false});
  }
  views.push_back({&model.fc_w, model.fc_w.dim(1), true});
  return views;
}

double filter_norm(const Tensor& t, index_t f, index_t filters, bool column_major) {
  double acc = 0.0;
  if (column_major) {
    const index_t rows = t.numel() / filters;
    for (index_t r = 0; r < rows; ++r) acc += t[r * filters + f] * t[r * filters + f];
  } else {
    const index_t per = t.numel() / filters;
    for (index_t i = 0; i < per; ++i) acc += t[f * per + i] * t[f * per + i];
  }
  return std::sqrt(acc);
}

void scale_filter(Tensor& t, index_t f, index_t filters, bool column_major, double s) {
  if (column_major) {
    const index_t rows = t.numel() / filters;
    for (index_t r = 0; r < rows; ++r) t[r * filters + f] *= s;
  } else {
    const index_t per = t.numel() / filters;
    for (index_t i = 0; i < per; ++i) t[f * per + i] *= s;
  }
}

Tensor draw_direction(Rng& rng, const Tensor& weights, index_t filters, bool column_major) {
  Tensor d(weights.shape());
  for (index_t i = 0; i < d.numel(); ++i) d[i] = rng.normal();
  for (index_t f = 0; f < filters; ++f) {
    const double wn = filter_norm(weights, f, filters, column_major);
    const double dn = filter_norm(d, f, filters, column_major);
    scale_filter(d, f, filters, column_major, dn > 0.0 ? wn / dn : 0.0);
  }
  return d;
}

std::vector<double> grid_coords(index_t resolution, double span) {
  std::vector<double> xs;
  if (resolution == 1) {
    xs.push_back(0.0);
    return xs;
  }
  for (index_t i = 0; i < resolution; ++i) {
    // Integer numerator keeps the coordinates exactly antisymmetric around
    // the center cell (and the center exactly zero for odd resolutions).
    const double q = static_cast<double>(2 * i - (resolution - 1)) /
                     static_cast<double>(resolution - 1);
    xs.push_back(span * q);
  }
  return xs;
}

struct LossPair {
  double sdt, tet;
  bool finite;
};

LossPair eval_losses(Model& model, const LabeledFrames& data, index_t steps,
                     index_t batch_size) {
  double sum_sdt = 0.0, sum_tet = 0.0;
  index_t total = 0;
  bool finite = true;
  for (index_t begin = 0; begin < data.count(); begin += batch_size) {
    const index_t end = std::min(data.count(), begin + batch_size);
    std::vector<index_t> indices;
    for (index_t i = begin; i < end; ++i) indices.push_back(i);
    std::vector<int> labels;
    for (index_t i : indices) labels.push_back(data.labels[static_cast<std::size_t>(i)]);
    const Tensor stacked = stack_batch(data, indices, steps);
    Tape tape;
    ForwardOptions fwd;  // eval mode
    ForwardResult f = forward(tape, model, stacked, steps, fwd);
    const double w = static_cast<double>(end - begin);
    const double s = loss_sdt(f.outputs, labels);
    const double t = loss_tet(f.outputs, labels);
    if (!std::isfinite(s) || !std::isfinite(t)) finite = false;
    sum_sdt += s * w;
    sum_tet += t * w;
    total += end - begin;
  }
  return {sum_sdt / static_cast<double>(total), sum_tet / static_cast<double>(total), finite};
}

}  // namespace

ScanDirections make_directions(const Model& model, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, {rng_tag::kDirections});
  ScanDirections dirs;
  auto draw_all = [&](std::vector<Tensor>& out) {
    for (const ConvBlock& blk : model.convs) {
      out.push_back(draw_direction(rng, blk.w, blk.w.dim(0), false));
    }
    out.push_back(draw_direction(rng, model.fc_w, model.fc_w.dim(1), true));
  };
  draw_all(dirs.d1);
  draw_all(dirs.d2);
  return dirs;
}

ScanDirections negate(const ScanDirections& dirs) {
  ScanDirections out = dirs;
  for (Tensor& t : out.d1) {
    for (index_t i = 0; i < t.numel(); ++i) t[i] = -t[i];
  }
  for (Tensor& t : out.d2) {
    for (index_t i = 0; i < t.numel(); ++i) t[i] = -t[i];
  }
  return out;
}

LandscapeGrid landscape_scan(Model& model, const LabeledFrames& data, index_t steps,
                             index_t batch_size, index_t resolution, double span,
                             std::uint64_t directions_seed) {
  return landscape_scan(model, data, steps, batch_size, resolution, span,
                        make_directions(model, directions_seed));
}

LandscapeGrid landscape_scan(Model& model, const LabeledFrames& data, index_t steps,
                             index_t batch_size, index_t resolution, double span,
                             const ScanDirections& dirs) {
  if (resolution < 1) throw std::invalid_argument("landscape: resolution must be >= 1");
  if (span < 0.0) throw std::invalid_argument("landscape: span must be >= 0");

  std::vector<PerturbView> views = perturb_views(model);
  if (dirs.d1.size() != views.size() || dirs.d2.size() != views.size()) {
    throw std::invalid_argument("landscape: direction count does not match model");
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (!dirs.d1[i].same_shape(*views[i].tensor) || !dirs.d2[i].same_shape(*views[i].tensor)) {
      throw std::invalid_argument("landscape: direction shape mismatch at tensor " +
                                  std::to_string(i));
    }
  }

  LandscapeGrid grid;
  grid.resolution = resolution;
  grid.span = span;
  grid.alphas = grid_coords(resolution, span);
  grid.betas = grid_coords(resolution, span);

  std::vector<Tensor> saved;
  saved.reserve(views.size());
  for (const PerturbView& v : views) saved.push_back(*v.tensor);

  const LossPair center = eval_losses(model, data, steps, batch_size);
  grid.center_sdt = center.sdt;
  grid.center_tet = center.tet;

  for (index_t i = 0; i < resolution; ++i) {
    for (index_t j = 0; j < resolution; ++j) {
      const double a = grid.alphas[static_cast<std::size_t>(i)];
      const double b = grid.betas[static_cast<std::size_t>(j)];
      for (std::size_t v = 0; v < views.size(); ++v) {
        Tensor& w = *views[v].tensor;
        const Tensor& base = saved[v];
        const Tensor& da = dirs.d1[v];
        const Tensor& db = dirs.d2[v];
        for (index_t e = 0; e < w.numel(); ++e) w[e] = base[e] + a * da[e] + b * db[e];
      }
      const LossPair cell = eval_losses(model, data, steps, batch_size);
      grid.loss_sdt.push_back(cell.sdt);
      grid.loss_tet.push_back(cell.tet);
      grid.finite.push_back(cell.finite);
    }
  }

  for (std::size_t v = 0; v < views.size(); ++v) *views[v].tensor = saved[v];
  return grid;
}

double sharpness_index(const LandscapeGrid& grid, const std::vector<double>& values,
                       index_t radius_cells) {
  if (grid.resolution % 2 == 0) {
    throw std::invalid_argument("sharpness: needs an odd grid resolution (exact center cell)");
  }
  if (static_cast<index_t>(values.size()) != grid.resolution * grid.resolution) {
    throw std::invalid_argument("sharpness: value count does not match grid");
  }
  const index_t c = grid.resolution / 2;
  if (radius_cells < 0 || radius_cells > c) {
    throw std::invalid_argument("sharpness: radius outside grid");
  }
  const double center = values[static_cast<std::size_t>(c * grid.resolution + c)];
  double acc = 0.0;
  index_t count = 0;
  for (index_t i = 0; i < grid.resolution; ++i) {
    for (index_t j = 0; j < grid.resolution; ++j) {
      const double di = static_cast<double>(i - c);
      const double dj = static_cast<double>(j - c);
      if (std::sqrt(di * di + dj * dj) > static_cast<double>(radius_cells)) continue;
      acc += values[static_cast<std::size_t>(i * grid.resolution + j)] - center;
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

double sharpness_index_sdt(const LandscapeGrid& grid, index_t radius_cells) {
  return sharpness_index(grid, grid.loss_sdt, radius_cells);
}

double sharpness_index_tet(const LandscapeGrid& grid, index_t radius_cells) {
  return sharpness_index(grid, grid.loss_tet, radius_cells);
}

void write_landscape_csv(const std::string& path, const LandscapeGrid& grid) {
  auto os = csv::open_out(path);
  os << "alpha,beta,loss_sdt,loss_tet\n";
  for (index_t i = 0; i < grid.resolution; ++i) {
    for (index_t j = 0; j < grid.resolution; ++j) {
      const std::size_t cell = static_cast<std::size_t>(i * grid.resolution + j);
      os << csv::num(grid.alphas[static_cast<std::size_t>(i)]) << ','
         << csv::num(grid.betas[static_cast<std::size_t>(j)]) << ','
         << csv::num(grid.loss_sdt[cell]) << ',' << csv::num(grid.loss_tet[cell]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// energy
// ---------------------------------------------------------------------------

namespace {

// Dense in-bounds tap count for one conv output map: padding taps fall
// outside the real input and are not counted as multiplications.
std::uint64_t conv_dense_taps(index_t h, index_t w, index_t k, index_t pad) {
  std::uint64_t taps = 0;
  for (index_t oy = 0; oy < h; ++oy) {
    for (index_t ox = 0; ox < w; ++ox) {
      index_t valid = 0;
      for (index_t dy = 0; dy < k; ++dy) {
        const index_t iy = oy + dy - pad;
        if (iy < 0 || iy >= h) continue;
        for (index_t dx = 0; dx < k; ++dx) {
          const index_t ix = ox + dx - pad;
          if (ix < 0 || ix >= w) continue;
          ++valid;
        }
      }
      taps += static_cast<std::uint64_t>(valid);
    }
  }
  return taps;
}

// One addition per nonzero incoming activation per outgoing connection,
// counted from the receiving side: active inputs inside each output window.
std::uint64_t conv_event_adds(const Tensor& input, index_t k, index_t pad, index_t cout) {
  const index_t m = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  std::uint64_t active_taps = 0;
  for (index_t n = 0; n < m; ++n) {
    for (index_t oy = 0; oy < h; ++oy) {
      for (index_t ox = 0; ox < w; ++ox) {
        for (index_t ic = 0; ic < c; ++ic) {
          for (index_t dy = 0; dy < k; ++dy) {
            const index_t iy = oy + dy - pad;
            if (iy < 0 || iy >= h) continue;
            for (index_t dx = 0; dx < k; ++dx) {
              const index_t ix = ox + dx - pad;
              if (ix < 0 || ix >= w) continue;
              if (input[((n * c + ic) * h + iy) * w + ix] != 0.0) ++active_taps;
            }
          }
        }
      }
    }
  }
  return active_taps * static_cast<std::uint64_t>(cout);
}

}  // namespace

EnergyReport energy_estimate(Model& folded_model, const Tensor& frames, index_t steps) {
  if (folded_model.lif.activation != ActivationMode::kHeavisideTriangle) {
    throw std::invalid_argument("energy: smooth activation has no spikes to gate; "
                                "use Heaviside mode");
  }
  for (const ConvBlock& blk : folded_model.convs) {
    if (!blk.folded) {
      throw std::invalid_argument("energy: fold normalization into the convolutions first");
    }
  }

  Tape tape;
  ForwardOptions fwd;
  fwd.record_layer_inputs = true;
  const Tensor stacked = replicate_frames(frames, steps);
  ForwardResult f = forward(tape, folded_model, stacked, steps, fwd);

  EnergyReport report;
  std::size_t conv_idx = 0;
  for (std::size_t layer = 0; layer < f.layer_inputs.size(); ++layer) {
    const Tensor& input = f.layer_inputs[layer];
    LayerEnergy le;
    const bool is_first = layer == 0;
    if (input.ndim() == 4) {
      const ConvBlock& blk = folded_model.convs[conv_idx];
      const index_t k = blk.w.dim(2);
      const index_t pad = (k - 1) / 2;
      const index_t cout = blk.w.dim(0);
      le.name = "conv" + std::to_string(conv_idx);
      if (is_first) {
        const std::uint64_t taps =
            conv_dense_taps(input.dim(2), input.dim(3), k, pad) *
            static_cast<std::uint64_t>(input.dim(1));
        le.mults = taps * static_cast<std::uint64_t>(cout) *
                   static_cast<std::uint64_t>(input.dim(0));
      } else {
        le.adds = conv_event_adds(input, k, pad, cout);
      }
      ++conv_idx;
    } else {
      le.name = "fc";
      const index_t classes = folded_model.num_classes;
      if (is_first) {
        le.mults = static_cast<std::uint64_t>(input.numel()) *
                   static_cast<std::uint64_t>(classes);
      } else {
        std::uint64_t nonzero = 0;
        for (index_t i = 0; i < input.numel(); ++i) {
          if (input[i] != 0.0) ++nonzero;
        }
        le.adds = nonzero * static_cast<std::uint64_t>(classes);
      }
    }
    le.energy_pj = kEnergyAddPj * static_cast<double>(le.adds) +
                   kEnergyMultPj * static_cast<double>(le.mults);
    report.adds += le.adds;
    report.mults += le.mults;
    report.per_layer.push_back(std::move(le));
  }
  report.energy_pj = kEnergyAddPj * static_cast<double>(report.adds) +
                     kEnergyMultPj * static_cast<double>(report.mults);
  return report;
}

void write_energy_csv(const std::string& path, const EnergyReport& report) {
  auto os = csv::open_out(path);
  os << "layer,adds,mults,energy_pj\n";
  for (const LayerEnergy& le : report.per_layer) {
    os << le.name << ',' << le.adds << ',' << le.mults << ',' << csv::num(le.energy_pj) << '\n';
  }
  os << "total," << report.adds << ',' << report.mults << ',' << csv::num(report.energy_pj)
     << '\n';
}

}  // namespace spiketrain
