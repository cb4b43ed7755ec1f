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
#include "pihot/depth_ops.hpp"

#include <algorithm>
#include <cmath>

namespace pihot {

RelativePositionMap relative_position(const DepthMap& d_i, const DepthMap& d_o) {
  if (!d_i.same_dims(d_o)) {
    throw ShapeError("relative_position: depth maps differ, " + dims_str(d_i.height, d_i.width) +
                     " vs " + dims_str(d_o.height, d_o.width));
  }
  RelativePositionMap out(d_i.height, d_i.width);
  if (out.size() == 0) return out;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = std::abs(d_i.data[i] - d_o.data[i]);

  const auto [lo_it, hi_it] = std::minmax_element(out.data.begin(), out.data.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    std::fill(out.data.begin(), out.data.end(), 0.0);
    return out;
  }
  const double range = hi - lo;
  for (double& v : out.data) v = (v - lo) / range;
  return out;
}

Grid<double> area_downsample(const Grid<double>& map, int factor) {
  if (factor < 1) throw InvalidArgument("downsample factor must be >= 1");
  if (map.height % factor != 0 || map.width % factor != 0) {
    throw ShapeError("map " + dims_str(map.height, map.width) + " not divisible by factor " +
                     std::to_string(factor));
  }
  const int oh = map.height / factor;
  const int ow = map.width / factor;
  Grid<double> out(oh, ow);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double sum = 0.0;
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) sum += map.at(y * factor + dy, x * factor + dx);
      }
      out.at(y, x) = sum * inv;
    }
  }
  return out;
}

}  // namespace pihot
