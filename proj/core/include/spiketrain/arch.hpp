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

#include <string>
#include <vector>

#include "spiketrain/tensor.hpp"

namespace spiketrain {

/// Compact architecture-string grammar, dash separated:
///   <n>C<k>  convolution, n output channels, odd k x k kernel, stride 1,
///            same padding; followed by normalization and a spiking layer
///   AP<k>    k x k average pool, stride k
///   FC       classifier head (readout, no spiking); must be last
/// Example: "16C3-AP2-32C3-AP2-FC"
struct LayerDesc {
  enum class Kind { kConv, kAvgPool, kFc } kind;
  index_t channels = 0;  // conv only
  index_t kernel = 0;    // conv kernel or pool window
};

struct ArchSpec {
  std::vector<LayerDesc> layers;

  std::size_t conv_count() const;
  std::string to_string() const;
};

/// Parses the grammar above. Unknown or malformed tokens are rejected with
/// the token text and its 1-based position named.
ArchSpec parse_arch(const std::string& s);

// Stock architectures used across tests and experiments.
inline constexpr const char* kArchSnn5 = "16C3-64C5-AP2-128C5-AP2-256C5-AP2-512C3-AP2-FC";
inline constexpr const char* kArchVggSnn =
    "64C3-128C3-AP2-256C3-256C3-AP2-512C3-512C3-AP2-512C3-512C3-AP2-FC";
inline constexpr const char* kArchTiny = "16C3-AP2-32C3-AP2-FC";

}  // namespace spiketrain
