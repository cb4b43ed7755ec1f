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

// d_s = |d_i - d_o|, min-max normalized into [0, 1] over the whole map.
// A constant difference map (max == min) yields all zeros.
// Throws ShapeError when the maps differ in size.
RelativePositionMap relative_position(const DepthMap& d_i, const DepthMap& d_o);

// Mean over non-overlapping factor×factor blocks. Dimensions must divide.
Grid<double> area_downsample(const Grid<double>& map, int factor);

}  // namespace pihot
