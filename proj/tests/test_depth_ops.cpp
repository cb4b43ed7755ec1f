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

#include "oracles.hpp"
#include "pihot/depth_ops.hpp"

using namespace pihot;

namespace {

DepthMap random_depth(int h, int w, Rng& rng) {
  DepthMap d(h, w);
  for (auto& v : d.data) v = rng.uniform(0.0, 5.0);
  return d;
}

}  // namespace

TEST_CASE("identical depth maps give all zeros") {
  Rng rng(1);
  const DepthMap d = random_depth(6, 7, rng);
  CHECK(relative_position(d, d) == RelativePositionMap(6, 7, 0.0));
}

TEST_CASE("2x2 closed form") {
  DepthMap a(2, 2, 0.0);
  a.at(0, 0) = 2.0;
  const RelativePositionMap r = relative_position(a, DepthMap(2, 2, 0.0));
  CHECK(r.data == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("random 16x16 pair matches the scalar oracle exactly") {
  Rng rng(2);
  const DepthMap a = random_depth(16, 16, rng), b = random_depth(16, 16, rng);
  CHECK(relative_position(a, b) == oracle::relative_position(a, b));
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(relative_position(DepthMap(3, 3), DepthMap(3, 4)), ShapeError);
}

TEST_CASE("range, symmetry, shift and scale invariance") {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const DepthMap a = random_depth(8, 5, rng), b = random_depth(8, 5, rng);
    const RelativePositionMap r = relative_position(a, b);
    const auto [lo, hi] = std::minmax_element(r.data.begin(), r.data.end());
    CHECK(*lo == 0.0);
    CHECK(*hi == 1.0);
    CHECK(relative_position(b, a) == r);

    DepthMap as = a, bs = b, al = a, bl = b;
    const double c = rng.uniform(0.0, 3.0), lambda = rng.uniform(0.5, 4.0);
    for (size_t j = 0; j < a.size(); ++j) {
      as.data[j] += c;
      bs.data[j] += c;
      al.data[j] *= lambda;
      bl.data[j] *= lambda;
    }
    const RelativePositionMap shifted = relative_position(as, bs);
    const RelativePositionMap scaled = relative_position(al, bl);
    for (size_t j = 0; j < r.size(); ++j) {
      CHECK(shifted.data[j] == doctest::Approx(r.data[j]).epsilon(1e-9));
      CHECK(scaled.data[j] == doctest::Approx(r.data[j]).epsilon(1e-9));
    }
  }
}

TEST_CASE("constant difference maps are all zeros") {
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    // Dyadic values keep a + off − a exact.
    DepthMap a(4, 4);
    for (auto& v : a.data) v = rng.uniform_int(0, 64) / 8.0;
    DepthMap b = a;
    const double off = rng.uniform_int(1, 16) / 8.0;
    for (auto& v : b.data) v += off;
    for (double v : relative_position(a, b).data) CHECK(v == 0.0);
  }
}

TEST_CASE("area downsample averages blocks") {
  Grid<double> g(4, 4);
  for (int i = 0; i < 16; ++i) g.data[i] = i;
  const Grid<double> d = area_downsample(g, 2);
  CHECK(d.height == 2);
  CHECK(d.width == 2);
  CHECK(d.data == std::vector<double>{2.5, 4.5, 10.5, 12.5});
  CHECK(area_downsample(g, 1) == g);
  CHECK_THROWS_AS(area_downsample(g, 3), ShapeError);
}
