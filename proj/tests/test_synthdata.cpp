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
#include <set>

#include "pihot/depth_ops.hpp"
#include "pihot/png_io.hpp"
#include "pihot/synthdata.hpp"
#include "test_util.hpp"

using namespace pihot;
using pihot::testing::box;
using pihot::testing::simple_scene;
using pihot::testing::TempDir;
namespace fs = std::filesystem;

namespace {

// Classes of every object that may claim human pixel (x, y) under the rule.
std::set<int> qualifying(const SceneSpec& spec, int x, int y) {
  std::set<int> out;
  const int r = spec.rule.radius;
  for (const auto& o : spec.objects) {
    if (std::abs(o.depth - spec.human.depth) > spec.rule.tolerance + 1e-9) continue;
    bool near = false;
    for (int dy = -r; dy <= r && !near; ++dy) {
      for (int dx = -r; dx <= r && !near; ++dx) {
        const int yy = y + dy, xx = x + dx;
        near = yy >= 0 && yy < spec.height && xx >= 0 && xx < spec.width && o.contains(xx, yy);
      }
    }
    if (near) out.insert(o.class_id);
  }
  return out;
}

void check_rule(const SceneSpec& spec, const SceneSample& s) {
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const int label = s.labels.at(y, x);
      if (!s.human_mask.at(y, x)) {
        REQUIRE(label == 0);
        continue;
      }
      const auto q = qualifying(spec, x, y);
      if (q.empty()) {
        REQUIRE(label == 0);
      } else {
        REQUIRE(q.count(label) == 1);
      }
    }
  }
}

GeneratorParams small_params() {
  GeneratorParams gp;
  gp.num_classes = 6;
  return gp;
}

void expect_dataset_error(const fs::path& root, DatasetError::Kind kind, const std::string& needle) {
  try {
    load_dataset(root);
    FAIL("expected a dataset error");
  } catch (const DatasetError& e) {
    CHECK(e.kind() == kind);
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("abutting object at the human's depth gives a contact band") {
  const SceneSpec spec = simple_scene({box(6, 26, 24, 30, 1.0, 3)});
  const SceneSample s = render_scene(spec);
  // Human occupies x 10..19, y 6..25; rows 24 and 25 are within two pixels.
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const bool band = y >= 24 && y <= 25 && x >= 10 && x <= 19;
      REQUIRE(s.labels.at(y, x) == (band ? 3 : 0));
    }
  }
}

TEST_CASE("wall or far object behind the human gives no contact") {
  SceneSpec spec = simple_scene({box(6, 26, 24, 30, 2.0, 3), box(8, 0, 24, 16, 1.5, 2)});
  spec.background_depth = 3.0;
  const SceneSample s = render_scene(spec);
  for (int v : s.labels.data) REQUIRE(v == 0);
}

TEST_CASE("hidden part of an object still counts as footprint") {
  // A seat behind the human's legs at the same depth: the whole overlap is contact.
  const SceneSpec spec = simple_scene({box(4, 18, 28, 24, 1.05, 1)});
  const SceneSample s = render_scene(spec);
  for (int y = 18; y < 24; ++y) {
    for (int x = 10; x < 20; ++x) CHECK(s.labels.at(y, x) == 1);
  }
  check_rule(spec, s);
}

TEST_CASE("depth tolerance boundary") {
  for (double gap : {0.05, 0.1, 0.1001, 0.3}) {
    const SceneSpec spec = simple_scene({box(6, 26, 24, 30, 1.0 + gap, 2)});
    const SceneSample s = render_scene(spec);
    const bool any = std::any_of(s.labels.data.begin(), s.labels.data.end(), [](int v) { return v != 0; });
    CHECK(any == (gap <= 0.1));
  }
}

TEST_CASE("scene validation") {
  SceneSpec spec = simple_scene({box(0, 0, 4, 4, 1.0, 5)});
  CHECK_THROWS_AS(render_scene(spec), InvalidArgument);
  spec = simple_scene({box(0, 0, 4, 4, 0.0, 1)});
  CHECK_THROWS_AS(render_scene(spec), InvalidArgument);
  GeneratorParams gp;
  gp.height = gp.width = 12;
  CHECK_THROWS_AS(generate_samples(1, 1, gp), InvalidArgument);
  CHECK_THROWS_AS(generate_samples(1, 0, GeneratorParams{}), InvalidArgument);
}

TEST_CASE("generated samples satisfy the sample invariants") {
  const GeneratorParams gp = small_params();
  Rng rng(51);
  int with_contact = 0;
  for (int i = 0; i < 40; ++i) {
    const SceneSpec spec = random_scene(gp, rng);
    const SceneSample s = render_scene(spec);
    check_rule(spec, s);
    CHECK(contact_labels(spec, s.human_mask) == s.labels);
    with_contact += std::any_of(s.labels.data.begin(), s.labels.data.end(), [](int v) { return v > 0; });
    const RelativePositionMap d = relative_position(s.depth_with_human, s.depth_no_human);
    for (int p = 0; p < s.human_mask.height * s.human_mask.width; ++p) {
      if (s.human_mask.data[p]) continue;
      REQUIRE(s.depth_with_human.data[p] == s.depth_no_human.data[p]);
      REQUIRE(d.data[p] == 0.0);
      for (int c = 0; c < 3; ++c) REQUIRE(s.image.data[p * 3 + c] == s.image_no_human.data[p * 3 + c]);
    }
    for (int v : s.labels.data) REQUIRE((v >= 0 && v < gp.num_classes));
  }
  CHECK(with_contact == 40);
}

TEST_CASE("generation is deterministic in the seed") {
  const GeneratorParams gp = small_params();
  const auto a = generate_samples(7, 4, gp);
  const auto b = generate_samples(7, 4, gp);
  const auto c = generate_samples(8, 4, gp);
  for (int i = 0; i < 4; ++i) {
    CHECK(a[i].image.pixels_equal(b[i].image));
    CHECK(a[i].labels == b[i].labels);
    CHECK(a[i].depth_with_human == b[i].depth_with_human);
  }
  CHECK_FALSE(a[0].image.pixels_equal(c[0].image));
  // Sample i does not depend on how many were requested.
  CHECK(generate_samples(7, 2, gp)[1].image.pixels_equal(a[1].image));
}

TEST_CASE("seed 7, 16 samples: regeneration on disk is byte-identical") {
  TempDir d1("gen1"), d2("gen2");
  generate(d1.path(), 7, 16, GeneratorParams{});
  generate(d2.path(), 7, 16, GeneratorParams{});
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), d1.path());
    REQUIRE(pihot::testing::read_bytes(e.path()) == pihot::testing::read_bytes(d2.path() / rel));
    ++files;
  }
  CHECK(files == 16 * 6 + 1);
  CHECK(list_ids(d1.path()).size() == 16);
}

TEST_CASE("generate, write, load round trip") {
  TempDir dir("roundtrip");
  const GeneratorParams gp = small_params();
  const auto original = generate(dir.path(), 3, 5, gp);
  const auto loaded = load_dataset(dir.path());
  REQUIRE(loaded.size() == original.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == original[i].id);
    CHECK(loaded[i].image.pixels_equal(original[i].image));
    CHECK(loaded[i].image_no_human.pixels_equal(original[i].image_no_human));
    CHECK(loaded[i].human_mask == original[i].human_mask);
    CHECK(loaded[i].depth_with_human == original[i].depth_with_human);
    CHECK(loaded[i].depth_no_human == original[i].depth_no_human);
    CHECK(loaded[i].labels == original[i].labels);
  }
  const DatasetMeta meta = read_meta(dir.path());
  CHECK(meta.seed == 3);
  CHECK(meta.count == 5);
  CHECK(meta.num_classes == 6);
  CHECK(meta.class_names.size() == 6);
  CHECK(meta.palette.size() == 6);
  CHECK(meta.params.to_json() == gp.to_json());
}

TEST_CASE("dataset loading errors are named") {
  TempDir empty("empty");
  expect_dataset_error(empty.path(), DatasetError::Kind::kEmpty, "empty dataset");

  TempDir dir("errors");
  generate(dir.path(), 4, 2, small_params());
  const fs::path labels = dir / "labels/000001.png";

  pihot::testing::write_text(labels, "not a png");
  expect_dataset_error(dir.path(), DatasetError::Kind::kParse, labels.string());

  ContactLabelMap big(64, 64, 9);
  io::write_labels(labels, big);
  expect_dataset_error(dir.path(), DatasetError::Kind::kLabelOutOfRange, "label out of range");

  io::write_labels(labels, ContactLabelMap(32, 32));
  expect_dataset_error(dir.path(), DatasetError::Kind::kDimensionMismatch, "dimension mismatch");

  fs::remove(labels);
  expect_dataset_error(dir.path(), DatasetError::Kind::kMissingFile, labels.string());

  TempDir nometa("nometa");
  generate(nometa.path(), 4, 1, small_params());
  fs::remove(nometa / "meta");
  expect_dataset_error(nometa.path(), DatasetError::Kind::kMissingFile, "meta");
}

TEST_CASE("generator params survive JSON") {
  GeneratorParams gp;
  gp.height = 48;
  gp.rule.radius = 3;
  gp.noise_amplitude = 0.01;
  const GeneratorParams back = GeneratorParams::from_json(gp.to_json());
  CHECK(back.to_json() == gp.to_json());
  CHECK(back.height == 48);
  CHECK(back.rule.radius == 3);
}
