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

// Reference computations for tests. Everything here is deliberately naive
// and independent of the tape: straight loops, long-double accumulation,
// no shared code with the implementation under test.

#pragma once

#include <cmath>
#include <vector>

#include "spiketrain/tensor.hpp"

namespace spiketrain::oracle {

/// Cross-entropy of one logit row in long double, direct formula.
inline long double ce_row(const double* row, index_t k, int label) {
  long double m = row[0];
  for (index_t j = 1; j < k; ++j) m = std::max<long double>(m, row[j]);
  long double z = 0.0L;
  for (index_t j = 0; j < k; ++j) z += expl(static_cast<long double>(row[j]) - m);
  return logl(z) - (static_cast<long double>(row[label]) - m);
}

/// Batch-mean CE over (N,K) logits.
inline double mean_ce(const Tensor& logits, const std::vector<int>& labels) {
  const index_t n = logits.dim(0), k = logits.dim(1);
  long double acc = 0.0L;
  for (index_t i = 0; i < n; ++i) acc += ce_row(logits.data() + i * k, k, labels[i]);
  return static_cast<double>(acc / static_cast<long double>(n));
}

/// Per-step mean of batch CEs.
inline double tet_loss(const std::vector<Tensor>& outputs, const std::vector<int>& labels) {
  long double acc = 0.0L;
  for (const Tensor& o : outputs) acc += mean_ce(o, labels);
  return static_cast<double>(acc / static_cast<long double>(outputs.size()));
}

/// CE of the time-averaged output.
inline double sdt_loss(const std::vector<Tensor>& outputs, const std::vector<int>& labels) {
  Tensor mean(outputs[0].shape());
  for (const Tensor& o : outputs) {
    for (index_t i = 0; i < o.numel(); ++i) mean[i] += o[i];
  }
  for (index_t i = 0; i < mean.numel(); ++i) {
    mean[i] /= static_cast<double>(outputs.size());
  }
  return mean_ce(mean, labels);
}

/// Softmax of one row into `out`.
inline void softmax_row(const double* row, index_t k, double* out) {
  double m = row[0];
  for (index_t j = 1; j < k; ++j) m = std::max(m, row[j]);
  double z = 0.0;
  for (index_t j = 0; j < k; ++j) {
    out[j] = std::exp(row[j] - m);
    z += out[j];
  }
  for (index_t j = 0; j < k; ++j) out[j] /= z;
}

/// One exact LIF step on plain arrays (hard reset, threshold at equality).
struct LifOracle {
  double tau, v_th;
  void step(std::vector<double>& u, const std::vector<double>& input,
            std::vector<double>& spikes) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double u_pre = tau * u[i] + input[i];
      const double a = u_pre >= v_th ? 1.0 : 0.0;
      spikes[i] = a;
      u[i] = u_pre * (1.0 - a);
    }
  }
};

/// Naive same-padding stride-1 convolution, (C,H,W) -> (F,H,W).
inline std::vector<double> conv2d_chw(const std::vector<double>& x, index_t c, index_t h,
                                      index_t w, const std::vector<double>& weight, index_t f,
                                      index_t k) {
  const index_t pad = (k - 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(f * h * w), 0.0);
  for (index_t of = 0; of < f; ++of) {
    for (index_t oy = 0; oy < h; ++oy) {
      for (index_t ox = 0; ox < w; ++ox) {
        double acc = 0.0;
        for (index_t ic = 0; ic < c; ++ic) {
          for (index_t dy = 0; dy < k; ++dy) {
            const index_t iy = oy + dy - pad;
            if (iy < 0 || iy >= h) continue;
            for (index_t dx = 0; dx < k; ++dx) {
              const index_t ix = ox + dx - pad;
              if (ix < 0 || ix >= w) continue;
              acc += x[static_cast<std::size_t>((ic * h + iy) * w + ix)] *
                     weight[static_cast<std::size_t>(((of * c + ic) * k + dy) * k + dx)];
            }
          }
        }
        out[static_cast<std::size_t>((of * h + oy) * w + ox)] = acc;
      }
    }
  }
  return out;
}

}  // namespace spiketrain::oracle
