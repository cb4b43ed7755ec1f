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

// Checkpoint archive, all integers little-endian:
//
//   magic      8 bytes  "PIHOTCKP"
//   version    u32      kCheckpointVersion
//   step       u64      optimizer steps taken
//   config     u32 length + UTF-8 bytes (flat `key = value` lines)
//   count      u32      number of arrays
//   per array: u32 name length, name bytes, u32 ndim, ndim × u32 dims,
//              prod(dims) × f32 row-major data
//
// Array names are prefixed `param/`, `buffer/`, `adam.m/`, `adam.v/`.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pihot/tensor.hpp"

namespace pihot {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_text;
  std::uint64_t step = 0;
  std::vector<std::pair<std::string, Tensor<float>>> arrays;

  const Tensor<float>* find(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws CheckpointError on a missing, truncated or malformed file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace pihot
