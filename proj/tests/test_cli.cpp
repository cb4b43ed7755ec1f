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

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pihot/checkpoint.hpp"
#include "pihot/png_io.hpp"
#include "test_util.hpp"

#ifndef PIHOT_CLI_PATH
#error "PIHOT_CLI_PATH must point at the pihot binary"
#endif

using namespace pihot;
using pihot::testing::read_bytes;
using pihot::testing::read_text;
using pihot::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;  // stdout and stderr
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" PIHOT_CLI_PATH "' " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

size_t count_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) return 0;
  return static_cast<size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

bool same_tree(const fs::path& a, const fs::path& b) {
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    if (read_bytes(e.path()) != read_bytes(b / fs::relative(e.path(), a))) return false;
  }
  return true;
}

const char* kSmall = "--set model.channels=8 --set train.batch_size=4 --lr 1e-3";

}  // namespace

TEST_CASE("cli: gen-data writes complete, reproducible samples") {
  TempDir dir("cli_gen");
  const Result r = run("gen-data --seed 7 --count 16 --out " + q(dir / "D"));
  REQUIRE(r.status == 0);
  for (const char* sub : {"images", "images_nohuman", "masks", "depth", "depth_nohuman", "labels"}) {
    CHECK(count_files(dir / "D" / sub) == 16);
  }
  CHECK(fs::exists(dir / "D/meta"));
  CHECK(r.output.find("16") != std::string::npos);

  REQUIRE(run("gen-data --seed 7 --count 16 --out " + q(dir / "D2")).status == 0);
  CHECK(same_tree(dir / "D", dir / "D2"));
  // Regenerating into the same directory leaves it byte-identical.
  const auto before = read_bytes(dir / "D/labels/000003.png");
  REQUIRE(run("gen-data --seed 7 --count 16 --out " + q(dir / "D")).status == 0);
  CHECK(read_bytes(dir / "D/labels/000003.png") == before);
  CHECK(same_tree(dir / "D", dir / "D2"));
}

TEST_CASE("cli: gen-data argument errors") {
  TempDir dir("cli_gen_err");
  const Result zero = run("gen-data --count 0 --out " + q(dir / "Z"));
  CHECK(zero.status != 0);
  CHECK_FALSE(fs::exists(dir / "Z/meta"));
  CHECK(run("gen-data --out " + q(dir / "Z")).status != 0);
  CHECK(run("gen-data --count 2 --size 8 --out " + q(dir / "Z")).status != 0);
  CHECK(run("no-such-command").status != 0);
}

TEST_CASE("cli: PIHOT_SEED is the fallback seed") {
  TempDir dir("cli_seed");
  REQUIRE(run("gen-data --count 2 --size 32 --out " + q(dir / "A"), "PIHOT_SEED=5").status == 0);
  REQUIRE(run("gen-data --seed 5 --count 2 --size 32 --out " + q(dir / "B")).status == 0);
  REQUIRE(run("gen-data --count 2 --size 32 --out " + q(dir / "C")).status == 0);
  CHECK(same_tree(dir / "A", dir / "B"));
  CHECK(read_bytes(dir / "A/images/000000.png") != read_bytes(dir / "C/images/000000.png"));
}

TEST_CASE("cli: train, resume, eval, infer, visualize-depth") {
  TempDir dir("cli_train");
  const fs::path data = dir / "data";
  REQUIRE(run("gen-data --seed 3 --count 8 --out " + q(data)).status == 0);
  const std::string base = std::string("train --data ") + q(data) + " " + kSmall;

  SUBCASE("50 steps give 50 finite loss rows") {
    const Result r = run(base + " --steps 50 --out " + q(dir / "m.ckpt") + " --log " + q(dir / "m.csv"));
    REQUIRE(r.status == 0);
    const auto rows = lines(read_text(dir / "m.csv"));
    REQUIRE(rows.size() == 51);
    CHECK(rows[0] == "step,loss");
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto comma = rows[i].find(',');
      CHECK(std::stoul(rows[i].substr(0, comma)) == i);
      CHECK(std::isfinite(std::stod(rows[i].substr(comma + 1))));
    }
    CHECK(read_checkpoint(dir / "m.ckpt").step == 50);
  }

  SUBCASE("resume 50 to 60 equals 60 uninterrupted") {
    REQUIRE(run(base + " --steps 60 --out " + q(dir / "full.ckpt")).status == 0);
    REQUIRE(run(base + " --steps 50 --out " + q(dir / "half.ckpt")).status == 0);
    REQUIRE(run(base + " --steps 60 --out " + q(dir / "res.ckpt") + " --resume " + q(dir / "half.ckpt") +
                " --log " + q(dir / "half.ckpt.loss.csv"))
                .status == 0);
    const Checkpoint a = read_checkpoint(dir / "full.ckpt"), b = read_checkpoint(dir / "res.ckpt");
    CHECK(a.step == 60);
    CHECK(b.step == 60);
    REQUIRE(a.arrays.size() == b.arrays.size());
    for (size_t i = 0; i < a.arrays.size(); ++i) CHECK(a.arrays[i].second == b.arrays[i].second);
    CHECK(read_text(dir / "full.ckpt.loss.csv") == read_text(dir / "half.ckpt.loss.csv"));
  }

  SUBCASE("--ablate spo is recorded in the checkpoint config") {
    REQUIRE(run(base + " --steps 1 --ablate spo --out " + q(dir / "a.ckpt")).status == 0);
    const std::string cfg = read_checkpoint(dir / "a.ckpt").config_text;
    CHECK(cfg.find("train.spo = off") != std::string::npos);
    CHECK(cfg.find("train.ipi = on") != std::string::npos);
  }

  SUBCASE("config file is overridden by flags") {
    pihot::testing::write_text(dir / "run.cfg", "train.steps = 7\ntrain.seed = 2\n");
    REQUIRE(run(base + " --config " + q(dir / "run.cfg") + " --out " + q(dir / "c1.ckpt")).status == 0);
    CHECK(read_checkpoint(dir / "c1.ckpt").step == 7);
    REQUIRE(run(base + " --config " + q(dir / "run.cfg") + " --steps 3 --out " + q(dir / "c2.ckpt")).status == 0);
    CHECK(read_checkpoint(dir / "c2.ckpt").step == 3);
    REQUIRE(run(base + " --config " + q(dir / "run.cfg") + " --set train.steps=4 --out " + q(dir / "c3.ckpt"))
                .status == 0);
    CHECK(read_checkpoint(dir / "c3.ckpt").step == 4);
    const std::string cfg = read_checkpoint(dir / "c3.ckpt").config_text;
    CHECK(cfg.find("train.seed = 2") != std::string::npos);
    CHECK(cfg.find("train.lr = 1e-3") != std::string::npos);
  }

  SUBCASE("training errors") {
    const Result missing = run("train --data " + q(dir / "nothing") + " --out " + q(dir / "x.ckpt"));
    CHECK(missing.status != 0);
    CHECK(missing.output.rfind("pihot: error: ", 0) == 0);
    CHECK(lines(missing.output).size() == 1);
    pihot::testing::write_text(dir / "broken.ckpt", "garbage");
    const Result corrupt = run(base + " --steps 2 --out " + q(dir / "y.ckpt") + " --resume " + q(dir / "broken.ckpt"));
    CHECK(corrupt.status != 0);
    CHECK(corrupt.output.find("corrupt checkpoint") != std::string::npos);
    CHECK(run(base + " --set bogus.key=1 --out " + q(dir / "z.ckpt")).status != 0);
  }

  SUBCASE("eval and infer") {
    REQUIRE(run(base + " --steps 20 --out " + q(dir / "e.ckpt")).status == 0);
    const Result e1 = run("eval --checkpoint " + q(dir / "e.ckpt") + " --data " + q(data) + " --out " + q(dir / "r1.json"));
    REQUIRE(e1.status == 0);
    const Result e2 = run("eval --checkpoint " + q(dir / "e.ckpt") + " --data " + q(data) + " --out " + q(dir / "r2.json"));
    CHECK(e1.output == e2.output);
    CHECK(read_text(dir / "r1.json") == read_text(dir / "r2.json"));
    const auto report = nlohmann::json::parse(read_text(dir / "r1.json"));
    for (const char* key : {"sc_acc", "c_acc", "miou", "wiou"}) {
      INFO(key);
      REQUIRE(report.at(key).is_number());
      CHECK(std::isfinite(report.at(key).get<double>()));
    }
    for (const char* key : {"sc_acc:", "c_acc:", "miou:", "wiou:"}) CHECK(e1.output.find(key) != std::string::npos);

    // Class-count mismatch.
    REQUIRE(run("gen-data --seed 3 --count 2 --num-classes 6 --out " + q(dir / "other")).status == 0);
    const Result mismatch = run("eval --checkpoint " + q(dir / "e.ckpt") + " --data " + q(dir / "other"));
    CHECK(mismatch.status != 0);
    CHECK(mismatch.output.find("class-count mismatch") != std::string::npos);

    // A dataset without contact pixels.
    REQUIRE(run("gen-data --seed 3 --count 2 --out " + q(dir / "nocontact")).status == 0);
    for (const auto& e : fs::directory_iterator(dir / "nocontact/labels")) io::write_labels(e.path(), ContactLabelMap(64, 64));
    const Result none = run("eval --checkpoint " + q(dir / "e.ckpt") + " --data " + q(dir / "nocontact"));
    CHECK(none.status == 0);
    CHECK(none.output.find("no contact pixels") != std::string::npos);
    CHECK(none.output.find("nan") == std::string::npos);

    // Inference on one 64×64 scene.
    const std::string infer = "infer --checkpoint " + q(dir / "e.ckpt") + " --image " + q(data / "images/000001.png") +
                              " --depth " + q(data / "depth/000001.png") + " --depth-hidden " +
                              q(data / "depth_nohuman/000001.png") + " --meta " + q(data / "meta");
    for (const char* tag : {"1", "2"}) {
      const std::string t = tag;
      REQUIRE(run(infer + " --mask " + q(data / "masks/000001.png") + " --out " + q(dir / ("l" + t + ".png")) +
                  " --overlay " + q(dir / ("o" + t + ".png")) + " --probs " + q(dir / ("p" + t + ".json")))
                  .status == 0);
    }
    const ContactLabelMap labels = io::read_labels(dir / "l1.png");
    CHECK((labels.height == 64 && labels.width == 64));
    for (int v : labels.data) CHECK((v >= 0 && v < 18));
    const ImageTensor overlay = io::read_rgb(dir / "o1.png");
    CHECK((overlay.height == 64 && overlay.width == 64));
    CHECK(read_bytes(dir / "l1.png") == read_bytes(dir / "l2.png"));
    CHECK(read_bytes(dir / "o1.png") == read_bytes(dir / "o2.png"));
    CHECK(read_bytes(dir / "p1.json") == read_bytes(dir / "p2.json"));
    const auto probs = nlohmann::json::parse(read_text(dir / "p1.json"));
    CHECK(probs.at("shape") == nlohmann::json::array({18, 64, 64}));

    const Result no_mask = run(infer + " --out " + q(dir / "l3.png"));
    CHECK(no_mask.status != 0);
    CHECK(no_mask.output.find("mask") != std::string::npos);
  }

  SUBCASE("visualize-depth") {
    REQUIRE(run("visualize-depth --data " + q(data) + " --id 000002 --out " + q(dir / "vis")).status == 0);
    for (const char* f : {"d_i.png", "d_o.png", "d_s.png"}) CHECK(fs::exists(dir / "vis" / f));
    CHECK(run("visualize-depth --data " + q(data) + " --id 999999 --out " + q(dir / "vis")).status != 0);
  }
}
