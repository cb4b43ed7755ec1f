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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pihot/rng.hpp"
#include "pihot/synthdata.hpp"

namespace pihot::testing {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("pihot_test_" + tag + "_" + std::to_string(rng.next() % 1000000007ULL));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::filesystem::path& p) {
  const auto b = read_bytes(p);
  return {b.begin(), b.end()};
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

inline PlacedShape box(double x0, double y0, double x1, double y1, double depth, int class_id,
                       Color color = {0.2, 0.4, 0.8}) {
  PlacedShape s;
  s.parts.push_back({ShapePrimitive{ShapePrimitive::Kind::kRect, x0, y0, x1, y1}, color});
  s.depth = depth;
  s.class_id = class_id;
  return s;
}

// 32×32 scene: a human block over the wall and objects placed by the caller.
inline SceneSpec simple_scene(std::vector<PlacedShape> objects, double human_depth = 1.0) {
  SceneSpec spec;
  spec.height = spec.width = 32;
  spec.human = box(10, 6, 20, 26, human_depth, 0, {0.9, 0.6, 0.5});
  spec.objects = std::move(objects);
  spec.noise_seed = 11;
  spec.num_classes = 5;
  return spec;
}

}  // namespace pihot::testing
