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

#include "spiketrain/arch.hpp"

#include <cctype>
#include <stdexcept>

namespace spiketrain {

namespace {

[[noreturn]] void reject(const std::string& token, std::size_t pos, const std::string& why) {
  throw std::invalid_argument("parse_arch: bad token \"" + token + "\" at position " +
                              std::to_string(pos) + " (" + why + ")");
}

bool parse_count(const std::string& s, std::size_t begin, std::size_t end, index_t* out) {
  if (begin >= end) return false;
  index_t v = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  *out = v;
  return true;
}

}  // namespace

std::size_t ArchSpec::conv_count() const {
  std::size_t n = 0;
  for (const LayerDesc& l : layers) {
    if (l.kind == LayerDesc::Kind::kConv) ++n;
  }
  return n;
}

std::string ArchSpec::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i > 0) s += "-";
    const LayerDesc& l = layers[i];
    switch (l.kind) {
      case LayerDesc::Kind::kConv:
        s += std::to_string(l.channels) + "C" + std::to_string(l.kernel);
        break;
      case LayerDesc::Kind::kAvgPool:
        s += "AP" + std::to_string(l.kernel);
        break;
      case LayerDesc::Kind::kFc:
        s += "FC";
        break;
    }
  }
  return s;
}

ArchSpec parse_arch(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("parse_arch: empty architecture string");

  ArchSpec spec;
  std::size_t pos = 1;  // token position, 1-based
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t dash = s.find('-', start);
    const std::size_t end = (dash == std::string::npos) ? s.size() : dash;
    const std::string token = s.substr(start, end - start);
    if (token.empty()) {
      throw std::invalid_argument("parse_arch: empty token at position " + std::to_string(pos) +
                                  " (leading, trailing, or doubled dash)");
    }

    if (token == "FC") {
      if (end != s.size()) reject(token, pos, "FC must be the final layer");
      spec.layers.push_back({LayerDesc::Kind::kFc, 0, 0});
    } else if (token.size() > 2 && token.compare(0, 2, "AP") == 0) {
      index_t k = 0;
      if (!parse_count(token, 2, token.size(), &k) || k < 1) {
        reject(token, pos, "expected AP<k> with numeric k");
      }
      spec.layers.push_back({LayerDesc::Kind::kAvgPool, 0, k});
    } else {
      const std::size_t c = token.find('C');
      index_t channels = 0, kernel = 0;
      if (c == std::string::npos || !parse_count(token, 0, c, &channels) ||
          !parse_count(token, c + 1, token.size(), &kernel)) {
        reject(token, pos, "expected <n>C<k>, AP<k>, or FC");
      }
      if (channels < 1) reject(token, pos, "conv needs at least one channel");
      if (kernel < 1 || kernel % 2 == 0) reject(token, pos, "conv kernel must be odd");
      spec.layers.push_back({LayerDesc::Kind::kConv, channels, kernel});
    }

    if (dash == std::string::npos) break;
    start = dash + 1;
    ++pos;
    if (start == s.size()) {
      throw std::invalid_argument("parse_arch: empty token at position " + std::to_string(pos) +
                                  " (leading, trailing, or doubled dash)");
    }
  }

  if (spec.layers.empty() || spec.layers.back().kind != LayerDesc::Kind::kFc) {
    throw std::invalid_argument("parse_arch: architecture must end with FC");
  }
  return spec;
}

}  // namespace spiketrain
