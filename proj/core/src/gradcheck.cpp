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

#include "spiketrain/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spiketrain {

GradCheckResult grad_check(const ScalarProgram& program, const std::vector<Tensor>& params,
                           double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");

  std::vector<Tensor> analytic;
  const double base = program(params, &analytic);
  if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss at base point");
  if (analytic.size() != params.size()) {
    throw std::logic_error("grad_check: program returned " + std::to_string(analytic.size()) +
                           " gradients for " + std::to_string(params.size()) + " parameters");
  }

  GradCheckResult result;
  std::vector<Tensor> perturbed = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!analytic[p].same_shape(params[p])) {
      throw std::logic_error("grad_check: gradient shape " + shape_str(analytic[p].shape()) +
                             " does not match parameter " + shape_str(params[p].shape()));
    }
    for (index_t i = 0; i < params[p].numel(); ++i) {
      const double saved = perturbed[p][i];
      perturbed[p][i] = saved + eps;
      const double plus = program(perturbed, nullptr);
      perturbed[p][i] = saved - eps;
      const double minus = program(perturbed, nullptr);
      perturbed[p][i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw std::runtime_error("grad_check: non-finite loss at parameter " + std::to_string(p) +
                                 " element " + std::to_string(i));
      }
      const double fd = (plus - minus) / (2.0 * eps);
      const double rel = std::abs(analytic[p][i] - fd) / (std::abs(fd) + 1e-12);
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = p;
        result.worst_elem = i;
        result.analytic = analytic[p][i];
        result.numeric = fd;
      }
    }
  }
  return result;
}

}  // namespace spiketrain
