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

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pihot/error.hpp"

namespace pihot {

// Row-major H×W grid of scalars. Base of masks, depth maps and label maps.
template <typename T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw ShapeError("negative grid dimensions");
  }

  T& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  const T& at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return data.size(); }
  bool same_dims(int h, int w) const { return height == h && width == w; }
  template <typename U>
  bool same_dims(const Grid<U>& o) const { return height == o.height && width == o.width; }

  bool operator==(const Grid& o) const = default;
};

inline std::string dims_str(int h, int w) {
  return std::to_string(h) + "x" + std::to_string(w);
}

// Human region m. Every element is 0 or 1.
struct BinaryMask : Grid<std::uint8_t> {
  using Grid::Grid;
  explicit BinaryMask(Grid<std::uint8_t> g) : Grid(std::move(g)) {}

  // Throws InvalidArgument unless dims >= 1 and values are in {0, 1}.
  void validate() const {
    if (height < 1 || width < 1) throw InvalidArgument("mask must be at least 1x1");
    for (auto v : data) {
      if (v > 1) throw InvalidArgument("mask values must be 0 or 1");
    }
  }
  size_t count() const {
    size_t n = 0;
    for (auto v : data) n += v;
    return n;
  }
};

// Nonnegative depth (stub units or meters). d_i, d_o.
using DepthMap = Grid<double>;
// Normalized |d_i - d_o| in [0, 1].
using RelativePositionMap = Grid<double>;
// Class per pixel, 0 = background.
using ContactLabelMap = Grid<int>;

inline void validate_depth(const DepthMap& d, const char* what = "depth map") {
  for (double v : d.data) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(std::string(what) + " must be finite and nonnegative");
    }
  }
}

// Ground-truth depth planes attached to a rendered scene. The oracle depth
// stub reads `visible`; the diffusion inpainter hands `hidden` (the scene with
// the human removed) to its output so a downstream oracle lookup sees it.
struct DepthSidecar {
  DepthMap visible;
  DepthMap hidden;
};

// H×W×3 image with values in [0, 1], interleaved RGB.
struct ImageTensor {
  int height = 0;
  int width = 0;
  std::vector<double> data;
  std::shared_ptr<const DepthSidecar> sidecar;

  ImageTensor() = default;
  ImageTensor(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {}

  double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }

  void validate() const {
    if (height < 1 || width < 1) throw InvalidArgument("image must be at least 1x1");
    if (data.size() != static_cast<size_t>(height) * width * 3) {
      throw ShapeError("image buffer does not match " + dims_str(height, width) + "x3");
    }
    for (double v : data) {
      if (!std::isfinite(v)) throw InvalidArgument("image values must be finite");
    }
  }

  // Pixel equality; the sidecar is metadata and is not compared.
  bool pixels_equal(const ImageTensor& o) const {
    return height == o.height && width == o.width && data == o.data;
  }
};

}  // namespace pihot
