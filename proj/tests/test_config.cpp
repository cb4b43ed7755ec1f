/* Copyright 2026 The PIHOT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <doctest.h>

#include "pihot/config.hpp"
#include "test_util.hpp"

using namespace pihot;

TEST_CASE("every key has a default and the defaults parse") {
  const RunConfig cfg;
  for (const auto& k : config_keys()) {
    CHECK(cfg.get(k.name) == k.default_value);
    CHECK_FALSE(k.help.empty());
  }
  const ModelConfig m = cfg.model();
  CHECK(m.channels == 32);
  CHECK(m.downsample == 8);
  CHECK(m.num_classes == 18);
  CHECK(m.alpha == 0.1);
  CHECK(m.beta == 0.1);
  CHECK(cfg.loss().background_weight == 0.2);
  CHECK(cfg.loss().reduction == nn::Reduction::kMean);
  CHECK(cfg.train().lr == 1e-5);
  CHECK(cfg.ablation() == AblationFlags{});
  CHECK(cfg.aggregation() == Aggregation::kMicro);
  CHECK(cfg.dilation_kernel() == 3);
  CHECK(cfg.dilation_iterations() == 1);
  CHECK(cfg.plugins().inpainter == "diffusion_stub");
  CHECK(cfg.plugins().depth == "oracle_stub");
}

TEST_CASE("unknown keys and bad values are rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("model.depth", "3"), ConfigError);
  CHECK_THROWS_AS(cfg.get("nope"), ConfigError);
  CHECK_THROWS_AS(cfg.set("train.steps", "ten"), ConfigError);
  CHECK_THROWS_AS(cfg.set("train.lr", "fast"), ConfigError);
  CHECK_THROWS_AS(cfg.set("train.oi", "maybe"), ConfigError);
  CHECK_THROWS_AS(cfg.set_assignment("train.steps"), ConfigError);
  CHECK_THROWS_AS(cfg.ablate("cpo"), ConfigError);
  CHECK(cfg == RunConfig{});
}

TEST_CASE("switch spellings") {
  for (const char* on : {"on", "true", "1"}) CHECK(parse_switch(on, "x"));
  for (const char* off : {"off", "false", "0"}) CHECK_FALSE(parse_switch(off, "x"));
  CHECK(parse_int(" 42", "x") == 42);
  CHECK_THROWS_AS(parse_int("4.2", "x"), ConfigError);
  CHECK(parse_double("1e-3", "x") == 1e-3);
}

TEST_CASE("config text: comments, whitespace, later lines win") {
  RunConfig cfg;
  cfg.merge_text(
      "# training\n"
      "train.steps = 20\n"
      "\n"
      "  train.lr=0.001   # inline\n"
      "train.steps = 30\n");
  CHECK(cfg.train().steps == 30);
  CHECK(cfg.train().lr == 1e-3);
}

TEST_CASE("config errors name the source line") {
  RunConfig cfg;
  try {
    cfg.merge_text("train.steps = 3\nbogus.key = 1\n", "run.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(cfg.merge_text("just words\n"), ConfigError);
}

TEST_CASE("to_text round trips") {
  RunConfig a;
  a.set("model.channels", "16");
  a.set("loss.class_weights", "1,2,3");
  a.ablate("spo");
  RunConfig b;
  b.merge_text(a.to_text());
  CHECK(a == b);
  CHECK(a.to_text().find("train.spo = off") != std::string::npos);
  CHECK_FALSE(b.ablation().spo);
}

TEST_CASE("ablate turns single modules off") {
  for (const char* m : {"oi", "ipi", "spo", "idsi"}) {
    RunConfig cfg;
    cfg.ablate(m);
    const AblationFlags f = cfg.ablation();
    CHECK(int(f.oi) + int(f.ipi) + int(f.spo) + int(f.idsi) == 3);
  }
}

TEST_CASE("config file merge") {
  pihot::testing::TempDir dir("config");
  pihot::testing::write_text(dir / "a.cfg", "train.batch_size = 2\nmodel.backbone = resnet50_shape\n");
  RunConfig cfg;
  cfg.merge_file(dir / "a.cfg");
  CHECK(cfg.train().batch_size == 2);
  CHECK(cfg.model().backbone == BackboneVariant::kResNet50Shape);
  CHECK_THROWS_AS(cfg.merge_file(dir / "missing.cfg"), Error);
}

TEST_CASE("loss weights from config") {
  RunConfig cfg;
  cfg.set("model.num_classes", "3");
  cfg.set("loss.class_weights", "2,1,4");
  CHECK(cfg.loss().weights(3) == std::vector<double>{0.4, 1.0, 4.0});
  CHECK_THROWS_AS(cfg.loss().weights(4), InvalidArgument);
  cfg.set("loss.reduction", "sum");
  CHECK(cfg.loss().reduction == nn::Reduction::kSum);
}
