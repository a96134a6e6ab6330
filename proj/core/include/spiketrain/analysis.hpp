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
#include <string>
#include <vector>

#include "spiketrain/data.hpp"
#include "spiketrain/network.hpp"
#include "spiketrain/trainer.hpp"

namespace spiketrain {

/// Two filter-normalized random directions in parameter space: Gaussian
/// entries, rescaled per conv filter (and per readout column) to that
/// filter's norm. Biases and normalization parameters stay unperturbed.
struct ScanDirections {
  std::vector<Tensor> d1;  // aligned with the model's conv weights + fc.w
  std::vector<Tensor> d2;
};

ScanDirections make_directions(const Model& model, std::uint64_t seed);
ScanDirections negate(const ScanDirections& dirs);

/// Loss surface on an n x n grid around the model's current weights:
/// value(i,j) = loss(theta + alpha_i * d1 + beta_j * d2) on the fixed data.
/// Both loss kinds are evaluated per cell from one forward pass.
struct LandscapeGrid {
  index_t resolution = 0;
  double span = 0.0;
  std::vector<double> alphas;    // row coordinate
  std::vector<double> betas;     // column coordinate
  std::vector<double> loss_sdt;  // resolution^2, row-major
  std::vector<double> loss_tet;
  std::vector<bool> finite;  // non-finite cells are flagged, scan continues
  double center_sdt = 0.0;
  double center_tet = 0.0;
};

LandscapeGrid landscape_scan(Model& model, const LabeledFrames& data, index_t steps,
                             index_t batch_size, index_t resolution, double span,
                             std::uint64_t directions_seed);
LandscapeGrid landscape_scan(Model& model, const LabeledFrames& data, index_t steps,
                             index_t batch_size, index_t resolution, double span,
                             const ScanDirections& dirs);

/// Mean loss increase over the cells within `radius_cells` (Euclidean, cell
/// units) of the center; the flatness number for a scanned minimum.
double sharpness_index(const LandscapeGrid& grid, const std::vector<double>& values,
                       index_t radius_cells);
double sharpness_index_sdt(const LandscapeGrid& grid, index_t radius_cells);
double sharpness_index_tet(const LandscapeGrid& grid, index_t radius_cells);

void write_landscape_csv(const std::string& path, const LandscapeGrid& grid);

// Energy accounting constants, 45nm CMOS per-operation costs in pJ.
inline constexpr double kEnergyAddPj = 0.9;
inline constexpr double kEnergyMultPj = 4.6;

struct LayerEnergy {
  std::string name;
  std::uint64_t adds = 0;
  std::uint64_t mults = 0;
  double energy_pj = 0.0;
};

struct EnergyReport {
  std::uint64_t adds = 0;
  std::uint64_t mults = 0;
  double energy_pj = 0.0;
  std::vector<LayerEnergy> per_layer;
};

/// Synaptic operation counts over one batch at the given unrolled length.
/// The first synaptic layer sees real-valued input and counts dense
/// multiply-accumulates (in-bounds taps only); every deeper layer counts one
/// addition per nonzero incoming activation per outgoing connection, so a
/// silent layer costs nothing. Requires a folded, Heaviside-mode model.
/// Bias additions and pooling are excluded from the count.
EnergyReport energy_estimate(Model& folded_model, const Tensor& frames, index_t steps);

void write_energy_csv(const std::string& path, const EnergyReport& report);

}  // namespace spiketrain
