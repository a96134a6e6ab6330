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

#include <stdexcept>

#include "doctest.h"
#include "spiketrain/arch.hpp"

using namespace spiketrain;

TEST_CASE("basic grammar") {
  ArchSpec spec = parse_arch("16C3-AP2-FC");
  REQUIRE(spec.layers.size() == 3);
  CHECK(spec.layers[0].kind == LayerDesc::Kind::kConv);
  CHECK(spec.layers[0].channels == 16);
  CHECK(spec.layers[0].kernel == 3);
  CHECK(spec.layers[1].kind == LayerDesc::Kind::kAvgPool);
  CHECK(spec.layers[1].kernel == 2);
  CHECK(spec.layers[2].kind == LayerDesc::Kind::kFc);
}

TEST_CASE("the five-conv stock string") {
  ArchSpec spec = parse_arch(kArchSnn5);
  CHECK(spec.conv_count() == 5);
  int pools = 0, fcs = 0;
  for (const LayerDesc& l : spec.layers) {
    if (l.kind == LayerDesc::Kind::kAvgPool) ++pools;
    if (l.kind == LayerDesc::Kind::kFc) ++fcs;
  }
  CHECK(pools == 4);
  CHECK(fcs == 1);
}

TEST_CASE("unknown tokens are rejected by name and position") {
  CHECK_THROWS_WITH_AS(parse_arch("16X3-FC"), doctest::Contains("\"16X3\""),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_arch("16X3-FC"), doctest::Contains("position 1"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_arch("16C3-banana-FC"), doctest::Contains("position 2"),
                       std::invalid_argument);
}

TEST_CASE("malformed strings") {
  CHECK_THROWS_AS(parse_arch(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_arch("16C3-"), std::invalid_argument);
  CHECK_THROWS_AS(parse_arch("-16C3-FC"), std::invalid_argument);
  CHECK_THROWS_AS(parse_arch("16C3--FC"), std::invalid_argument);
  CHECK_THROWS_AS(parse_arch("xCy-FC"), std::invalid_argument);
  CHECK_THROWS_AS(parse_arch("16C3-AP2"), std::invalid_argument);   // missing FC
  CHECK_THROWS_AS(parse_arch("FC-16C3"), std::invalid_argument);    // FC not final
  CHECK_THROWS_AS(parse_arch("16C4-FC"), std::invalid_argument);    // even kernel
  CHECK_THROWS_AS(parse_arch("0C3-FC"), std::invalid_argument);
}

TEST_CASE("parse then to_string is the identity on the stock strings") {
  for (const char* s : {kArchSnn5, kArchVggSnn, kArchTiny}) {
    CHECK(parse_arch(s).to_string() == s);
  }
}
