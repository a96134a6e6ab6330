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

#include <functional>
#include <vector>

#include "spiketrain/tensor.hpp"

namespace spiketrain {

/// A scalar program over a parameter list. The callable must rebuild its tape
/// on every call; when `grads` is non-null it must also deposit the analytic
/// gradient of the result w.r.t. each parameter (same order, same shapes).
using ScalarProgram =
    std::function<double(const std::vector<Tensor>& params, std::vector<Tensor>* grads)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  // Location of the worst element, for debugging failed checks.
  std::size_t worst_param = 0;
  index_t worst_elem = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central-difference verification of reverse-mode gradients:
/// rel err = |analytic - fd| / (|fd| + 1e-12), maximized over every element of
/// every parameter. Throws if the program returns a non-finite value at any
/// perturbed point, naming the parameter element.
GradCheckResult grad_check(const ScalarProgram& program, const std::vector<Tensor>& params,
                           double eps);

}  // namespace spiketrain
