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
#pragma once

#include "pihot/image.hpp"

namespace pihot {

// Side length N of the all-ones N×N dilation kernel. Must be odd and >= 1.
class DilationKernel {
 public:
  explicit DilationKernel(int size);
  int size() const { return size_; }
  int radius() const { return size_ / 2; }

 private:
  int size_;
};

// output[p] = 1 iff any pixel of the N×N window centred at p is 1. Pixels
// outside the frame count as 0. Equivalent to convolving with the all-ones
// kernel and thresholding at > 0.
//
// Throws InvalidArgument for an empty (0-sized) or non-binary mask.
BinaryMask dilate_mask(const BinaryMask& mask, DilationKernel kernel);

// Applies dilate_mask `iterations` times (iterations >= 0).
BinaryMask dilate_mask(const BinaryMask& mask, DilationKernel kernel, int iterations);

BinaryMask flip_horizontal(const BinaryMask& mask);

}  // namespace pihot
