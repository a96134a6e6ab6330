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

#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "spiketrain/config.hpp"

using namespace spiketrain;

namespace {

std::string write_config(const std::string& body) {
  const std::string path = "test_config.cfg";
  std::ofstream os(path, std::ios::trunc);
  os << body;
  return path;
}

}  // namespace

TEST_CASE("an empty file resolves to valid defaults") {
  const std::string path = write_config("");
  RunConfig cfg = parse_config(path);
  std::remove(path.c_str());
  CHECK(cfg.tau == 0.5);
  CHECK(cfg.v_th == 1.0);
  CHECK(cfg.phi == 1.0);      // defaults to v_th
  CHECK(cfg.lambda == 0.05);  // static-data default
  CHECK(cfg.arch == std::string(kArchTiny));
  CHECK(cfg.steps == 4);
}

TEST_CASE("the event-data default for the regularizer weight") {
  RunConfig cfg = parse_config("", {"dataset=event_fixture", "data_dir=unused"});
  CHECK(cfg.lambda == 0.001);
}

TEST_CASE("key=value lines with comments and overrides") {
  const std::string path = write_config(
      "# experiment\n"
      "loss=TET\n"
      "lambda = 0.05\n"
      "T=4   # inline comment\n");
  RunConfig cfg = parse_config(path, {"T=6", "seed=9"});
  std::remove(path.c_str());
  CHECK(cfg.loss == "TET");
  CHECK(cfg.lambda == 0.05);
  CHECK(cfg.steps == 6);  // flag beats file
  CHECK(cfg.seed == 9);
  LossSpec spec = cfg.loss_spec();
  CHECK(spec.kind == LossKind::kTet);
  CHECK(spec.lambda == 0.05);
}

TEST_CASE("validation failures") {
  CHECK_THROWS_WITH_AS(parse_config("", {"T=0"}), doctest::Contains("T must be >= 1"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("", {"banana=1"}), doctest::Contains("banana"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("", {"epochs=zero"}), doctest::Contains("epochs"),
                       std::invalid_argument);
  CHECK_THROWS(parse_config("", {"lambda=1.5"}));
  CHECK_THROWS(parse_config("", {"loss=MAE"}));
  CHECK_THROWS(parse_config("", {"loss_switch_epoch=99", "epochs=10"}));
  CHECK_THROWS(parse_config("", {"arch=16Q3-FC"}));
  CHECK_THROWS(parse_config("", {"lr=-1"}));
}

TEST_CASE("the resolved echo re-parses to an equal configuration") {
  RunConfig cfg = parse_config("", {"loss=TOTAL", "lambda=0.2", "T=6", "optimizer=sgd",
                                    "augment=roll", "roll_max=3", "synthetic_noise=0.25"});
  const std::string text = resolved_config_text(cfg);
  const std::string path = write_config(text);
  RunConfig again = parse_config(path);
  std::remove(path.c_str());
  CHECK(again == cfg);
}

TEST_CASE("derived sub-configurations") {
  RunConfig cfg = parse_config(
      "", {"activation=sigmoid", "sigmoid_k=10", "detach_reset=true", "optimizer=sgd",
           "momentum=0.9", "weight_decay=4e-05", "lr_schedule=constant", "loss_switch_epoch=3",
           "epochs=10"});
  LifConfig lif = cfg.lif_config();
  CHECK(lif.activation == ActivationMode::kSigmoid);
  CHECK(lif.sigmoid_k == 10.0);
  CHECK(lif.detach_reset);

  TrainConfig tc = cfg.train_config();
  CHECK(tc.optimizer.kind == OptimizerKind::kSgd);
  CHECK(tc.optimizer.weight_decay == 4e-05);
  CHECK(tc.lr_schedule == LrSchedule::kConstant);
  REQUIRE(tc.loss_switch_epoch.has_value());
  CHECK(*tc.loss_switch_epoch == 3);
}

TEST_CASE("synthetic dataset materialization honors the config") {
  RunConfig cfg = parse_config(
      "", {"synthetic_classes=3", "synthetic_samples_per_class=5",
           "synthetic_test_per_class=2", "synthetic_size=6", "synthetic_noise=0.1"});
  DatasetSplit split = load_dataset(cfg);
  CHECK(split.train.count() == 15);
  CHECK(split.test.count() == 6);
  CHECK(split.train.num_classes == 3);
  CHECK(split.train.frames.dim(2) == 6);
}

TEST_CASE("missing data directory is a data error, not a config error") {
  RunConfig cfg = parse_config("", {"dataset=cifar10", "data_dir=/nonexistent/path"});
  CHECK_THROWS_AS(load_dataset(cfg), std::runtime_error);
}
