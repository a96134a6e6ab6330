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

namespace spiketrain {

using index_t = std::int64_t;

std::string shape_str(const std::vector<index_t>& shape);
index_t shape_numel(const std::vector<index_t>& shape);

/// Dense row-major n-dimensional array of doubles. Value semantics; every
/// activation, weight and gradient in the engine is one of these.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<index_t> shape);  // zero-filled
  Tensor(std::vector<index_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor full(std::vector<index_t> shape, double v);

  const std::vector<index_t>& shape() const { return shape_; }
  index_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t ndim() const { return shape_.size(); }
  index_t numel() const { return static_cast<index_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](index_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](index_t i) const { return data_[static_cast<std::size_t>(i)]; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  /// Scalar accessor; throws unless numel() == 1.
  double item() const;

 private:
  std::vector<index_t> shape_;
  std::vector<double> data_;
};

}  // namespace spiketrain
