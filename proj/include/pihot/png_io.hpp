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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pihot/image.hpp"

namespace pihot::io {

namespace fs = std::filesystem;

// 8-bit RGB. Values are quantized to k/255 on write.
ImageTensor read_rgb(const fs::path& path);
void write_rgb(const fs::path& path, const ImageTensor& image);

// Single channel, 0 = background, 255 = human. Any other value is a parse error.
BinaryMask read_mask(const fs::path& path);
void write_mask(const fs::path& path, const BinaryMask& mask);

// 16-bit single channel; stored integer = round(depth * scale).
DepthMap read_depth16(const fs::path& path, double scale);
void write_depth16(const fs::path& path, const DepthMap& depth, double scale);

// 8-bit single channel class indices (no palette).
ContactLabelMap read_labels(const fs::path& path);
void write_labels(const fs::path& path, const ContactLabelMap& labels);

// 8-bit grayscale of a [0, 1] map (values clamped).
void write_gray(const fs::path& path, const Grid<double>& map);

using Rgb8 = std::array<std::uint8_t, 3>;
void write_rgb8(const fs::path& path, int height, int width, const std::vector<Rgb8>& pixels);

// Writes bytes to `path` through a sibling temp file and rename.
void write_file_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const fs::path& path, const std::string& text);

}  // namespace pihot::io
