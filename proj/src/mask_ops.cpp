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
#include "pihot/mask_ops.hpp"

#include <algorithm>
#include <string>

namespace pihot {

DilationKernel::DilationKernel(int size) : size_(size) {
  if (size < 1 || size % 2 == 0) {
    throw InvalidArgument("dilation kernel size must be odd and >= 1, got " + std::to_string(size));
  }
}

BinaryMask dilate_mask(const BinaryMask& mask, DilationKernel kernel) {
  mask.validate();
  const int r = kernel.radius();
  if (r == 0) return mask;
  const int h = mask.height;
  const int w = mask.width;

  // The square window is separable: horizontal max, then vertical max.
  BinaryMask rows(h, w);
  for (int y = 0; y < h; ++y) {
    int last_on = -1 - r;  // most recent column holding a 1
    // Forward sweep covers the left half of the window...
    for (int x = 0; x < w; ++x) {
      if (mask.at(y, x)) last_on = x;
      if (x - last_on <= r) rows.at(y, x) = 1;
    }
    // ...backward sweep the right half.
    int next_on = w + r;
    for (int x = w - 1; x >= 0; --x) {
      if (mask.at(y, x)) next_on = x;
      if (next_on - x <= r) rows.at(y, x) = 1;
    }
  }

  BinaryMask out(h, w);
  for (int x = 0; x < w; ++x) {
    int last_on = -1 - r;
    for (int y = 0; y < h; ++y) {
      if (rows.at(y, x)) last_on = y;
      if (y - last_on <= r) out.at(y, x) = 1;
    }
    int next_on = h + r;
    for (int y = h - 1; y >= 0; --y) {
      if (rows.at(y, x)) next_on = y;
      if (next_on - y <= r) out.at(y, x) = 1;
    }
  }
  return out;
}

BinaryMask dilate_mask(const BinaryMask& mask, DilationKernel kernel, int iterations) {
  if (iterations < 0) throw InvalidArgument("dilation iterations must be >= 0");
  mask.validate();
  BinaryMask out = mask;
  for (int i = 0; i < iterations; ++i) out = dilate_mask(out, kernel);
  return out;
}

BinaryMask flip_horizontal(const BinaryMask& mask) {
  BinaryMask out(mask.height, mask.width);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) out.at(y, x) = mask.at(y, mask.width - 1 - x);
  }
  return out;
}

}  // namespace pihot
