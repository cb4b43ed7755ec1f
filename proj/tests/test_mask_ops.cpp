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
#include "pihot/mask_ops.hpp"

using namespace pihot;

TEST_CASE("dilating an empty mask gives an empty mask") {
  const BinaryMask m(5, 5);
  CHECK(dilate_mask(m, DilationKernel(3)) == m);
}

TEST_CASE("a centre pixel grows into the 3x3 block") {
  BinaryMask m(5, 5);
  m.at(2, 2) = 1;
  const BinaryMask d = dilate_mask(m, DilationKernel(3));
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      const bool inside = y >= 1 && y <= 3 && x >= 1 && x <= 3;
      CHECK(d.at(y, x) == (inside ? 1 : 0));
    }
  }
}

TEST_CASE("random 8x8 mask with N=5 matches the window-max oracle") {
  Rng rng(11);
  const BinaryMask m = oracle::random_mask(8, 8, 0.15, rng);
  CHECK(dilate_mask(m, DilationKernel(5)) == oracle::dilate(m, 5));
}

TEST_CASE("kernel size must be odd and positive") {
  CHECK_THROWS_AS(DilationKernel(4), InvalidArgument);
  CHECK_THROWS_AS(DilationKernel(0), InvalidArgument);
  CHECK_THROWS_AS(DilationKernel(-3), InvalidArgument);
  CHECK_NOTHROW(DilationKernel(1));
}

TEST_CASE("empty and non-binary masks are rejected") {
  CHECK_THROWS_AS(dilate_mask(BinaryMask(0, 4), DilationKernel(3)), InvalidArgument);
  BinaryMask bad(3, 3);
  bad.at(1, 1) = 2;
  CHECK_THROWS_AS(dilate_mask(bad, DilationKernel(3)), InvalidArgument);
}

TEST_CASE("N=1 is the identity") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const BinaryMask m = oracle::random_mask(7, 9, 0.3, rng);
    CHECK(dilate_mask(m, DilationKernel(1)) == m);
  }
}

TEST_CASE("dilation is extensive, monotone and commutes with flips") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const int n = 2 * rng.uniform_int(0, 3) + 1;
    const BinaryMask a = oracle::random_mask(10, 12, 0.1, rng);
    BinaryMask b = a;
    for (auto& v : b.data) v = v || rng.bernoulli(0.1);
    const BinaryMask da = dilate_mask(a, DilationKernel(n));
    const BinaryMask db = dilate_mask(b, DilationKernel(n));
    for (size_t j = 0; j < a.size(); ++j) {
      REQUIRE(da.data[j] >= a.data[j]);
      REQUIRE(db.data[j] >= da.data[j]);
    }
    CHECK(dilate_mask(flip_horizontal(a), DilationKernel(n)) == flip_horizontal(da));
  }
}

TEST_CASE("every 4x4 mask matches the oracle with N=3") {
  int mismatches = 0;
  for (int bits = 0; bits < (1 << 16); ++bits) {
    BinaryMask m(4, 4);
    for (int i = 0; i < 16; ++i) m.data[i] = (bits >> i) & 1;
    mismatches += !(dilate_mask(m, DilationKernel(3)) == oracle::dilate(m, 3));
  }
  CHECK(mismatches == 0);
}

TEST_CASE("iterated dilation equals one pass with the composed kernel") {
  Rng rng(8);
  const BinaryMask m = oracle::random_mask(12, 12, 0.05, rng);
  CHECK(dilate_mask(m, DilationKernel(3), 2) == dilate_mask(m, DilationKernel(5)));
  CHECK(dilate_mask(m, DilationKernel(3), 0) == m);
  CHECK_THROWS_AS(dilate_mask(m, DilationKernel(3), -1), InvalidArgument);
}
