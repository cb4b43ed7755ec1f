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
#include "pihot/plugins.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "pihot/png_io.hpp"

namespace pihot {
namespace fs = std::filesystem;

namespace {

// Scratch directory removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("pihot-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

void run_command(const std::string& cmd, const fs::path& expected_output) {
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw Error("external command failed (status " + std::to_string(rc) + "): " + cmd);
  if (!fs::exists(expected_output)) {
    throw Error("external command produced no output file: " + cmd);
  }
}

void check_dims(const ImageTensor& image, int h, int w, const char* what) {
  if (image.height != h || image.width != w) {
    throw ShapeError(std::string(what) + ": expected " + dims_str(h, w) + ", got " +
                     dims_str(image.height, image.width));
  }
}

}  // namespace

std::string expand_command(std::string tmpl,
                           std::initializer_list<std::pair<std::string, std::string>> vars) {
  for (const auto& [key, value] : vars) {
    const std::string token = "{" + key + "}";
    const std::string quoted = shell_quote(value);
    for (size_t pos = tmpl.find(token); pos != std::string::npos;
         pos = tmpl.find(token, pos + quoted.size())) {
      tmpl.replace(pos, token.size(), quoted);
    }
  }
  return tmpl;
}

DiffusionInpainter::DiffusionInpainter(int max_iterations, double tolerance)
    : max_iterations_(max_iterations), tolerance_(tolerance) {
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be >= 0");
  if (!(tolerance >= 0)) throw InvalidArgument("tolerance must be >= 0");
}

ImageTensor DiffusionInpainter::run(const ImageTensor& image, const BinaryMask& mask) const {
  const int h = image.height;
  const int w = image.width;
  ImageTensor out = image;
  out.sidecar.reset();

  std::vector<int> holes;
  for (int i = 0; i < h * w; ++i) {
    if (mask.data[i]) holes.push_back(i);
  }

  // Onion peel: each pass fills holes that touch a known pixel with the mean
  // of their known 8-neighbours, reading the previous pass's state.
  std::vector<std::uint8_t> known(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) known[i] = mask.data[i] ? 0 : 1;
  std::vector<int> pending = holes;
  while (!pending.empty()) {
    std::vector<int> filled;
    std::vector<std::array<double, 3>> values;
    std::vector<int> still;
    for (int idx : pending) {
      const int y = idx / w;
      const int x = idx % w;
      std::array<double, 3> acc{0, 0, 0};
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = y + dy;
          const int nx = x + dx;
          if ((dy == 0 && dx == 0) || ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          if (!known[static_cast<size_t>(ny) * w + nx]) continue;
          for (int c = 0; c < 3; ++c) acc[c] += out.at(ny, nx, c);
          ++n;
        }
      }
      if (n > 0) {
        for (double& a : acc) a /= n;
        filled.push_back(idx);
        values.push_back(acc);
      } else {
        still.push_back(idx);
      }
    }
    if (filled.empty()) break;  // unreachable while at least one pixel is known
    for (size_t i = 0; i < filled.size(); ++i) {
      const int y = filled[i] / w;
      const int x = filled[i] % w;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = values[i][c];
      known[filled[i]] = 1;
    }
    pending = std::move(still);
  }

  // Jacobi refinement over the holes: each becomes the mean of its 3×3 neighbours.
  std::vector<std::array<double, 3>> next(holes.size());
  for (int iter = 0; iter < max_iterations_; ++iter) {
    double max_delta = 0.0;
    for (size_t i = 0; i < holes.size(); ++i) {
      const int y = holes[i] / w;
      const int x = holes[i] % w;
      std::array<double, 3> acc{0, 0, 0};
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = y + dy;
          const int nx = x + dx;
          if ((dy == 0 && dx == 0) || ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          for (int c = 0; c < 3; ++c) acc[c] += out.at(ny, nx, c);
          ++n;
        }
      }
      for (int c = 0; c < 3; ++c) {
        next[i][c] = acc[c] / n;
        max_delta = std::max(max_delta, std::abs(next[i][c] - out.at(y, x, c)));
      }
    }
    for (size_t i = 0; i < holes.size(); ++i) {
      for (int c = 0; c < 3; ++c) out.at(holes[i] / w, holes[i] % w, c) = next[i][c];
    }
    if (max_delta < tolerance_) break;
  }

  if (image.sidecar) {
    out.sidecar = std::make_shared<DepthSidecar>(
        DepthSidecar{image.sidecar->hidden, image.sidecar->hidden});
  }
  return out;
}

ExternalInpainter::ExternalInpainter(std::string command_template)
    : command_(std::move(command_template)) {
  if (command_.empty()) throw ConfigError("external inpainter needs plugins.inpaint_command");
}

ImageTensor ExternalInpainter::run(const ImageTensor& image, const BinaryMask& mask) const {
  ScratchDir dir;
  const auto in = dir.path() / "image.png";
  const auto m = dir.path() / "mask.png";
  const auto out = dir.path() / "output.png";
  io::write_rgb(in, image);
  io::write_mask(m, mask);
  run_command(expand_command(command_, {{"image", in.string()},
                                        {"mask", m.string()},
                                        {"output", out.string()}}),
              out);
  ImageTensor result = io::read_rgb(out);
  check_dims(result, image.height, image.width, "external inpainter output");
  return result;
}

DepthMap OracleDepthStub::run(const ImageTensor& image) const {
  if (!image.sidecar) {
    throw InvalidArgument("oracle depth stub needs an image carrying a generator depth sidecar");
  }
  const DepthMap& d = image.sidecar->visible;
  if (!d.same_dims(image.height, image.width)) {
    throw ShapeError("depth sidecar does not match image dimensions");
  }
  return d;
}

ConstantDepthStub::ConstantDepthStub(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0) throw InvalidArgument("constant depth must be >= 0");
}

DepthMap ConstantDepthStub::run(const ImageTensor& image) const {
  return DepthMap(image.height, image.width, value_);
}

ExternalDepth::ExternalDepth(std::string command_template, double scale)
    : command_(std::move(command_template)), scale_(scale) {
  if (command_.empty()) throw ConfigError("external depth backend needs plugins.depth_command");
  if (!(scale > 0)) throw ConfigError("plugins.depth_scale must be positive");
}

DepthMap ExternalDepth::run(const ImageTensor& image) const {
  ScratchDir dir;
  const auto in = dir.path() / "image.png";
  const auto out = dir.path() / "depth.png";
  io::write_rgb(in, image);
  run_command(expand_command(command_, {{"image", in.string()}, {"output", out.string()}}), out);
  return io::read_depth16(out, scale_);
}

BinaryMask external_human_mask(const std::string& command_template, const ImageTensor& image) {
  if (command_template.empty()) throw ConfigError("no mask command configured");
  ScratchDir dir;
  const auto in = dir.path() / "image.png";
  const auto out = dir.path() / "mask.png";
  io::write_rgb(in, image);
  run_command(expand_command(command_template, {{"image", in.string()}, {"output", out.string()}}),
              out);
  BinaryMask mask = io::read_mask(out);
  if (!mask.same_dims(image.height, image.width)) {
    throw ShapeError("external mask does not match image dimensions");
  }
  return mask;
}

ImageTensor inpaint(const InpainterBackend& backend, const ImageTensor& image,
                    const BinaryMask& human_mask) {
  image.validate();
  human_mask.validate();
  if (!human_mask.same_dims(image.height, image.width)) {
    throw ShapeError("inpaint: mask " + dims_str(human_mask.height, human_mask.width) +
                     " does not match image " + dims_str(image.height, image.width));
  }
  if (human_mask.count() == human_mask.size()) {
    throw InvalidArgument("inpaint: mask covers the whole image, nothing to condition on");
  }
  ImageTensor out = backend.run(image, human_mask);
  check_dims(out, image.height, image.width, "inpainter output");
  return out;
}

DepthMap estimate_depth(const DepthBackend& backend, const ImageTensor& image) {
  image.validate();
  DepthMap d = backend.run(image);
  if (!d.same_dims(image.height, image.width)) {
    throw ShapeError("depth backend " + backend.name() + " returned " +
                     dims_str(d.height, d.width) + " for a " +
                     dims_str(image.height, image.width) + " image");
  }
  validate_depth(d, "estimated depth");
  return d;
}

std::unique_ptr<InpainterBackend> make_inpainter(const PluginConfig& cfg) {
  if (cfg.inpainter == "diffusion_stub") return std::make_unique<DiffusionInpainter>();
  if (cfg.inpainter == "external") return std::make_unique<ExternalInpainter>(cfg.inpaint_command);
  throw ConfigError("unknown plugins.inpainter: " + cfg.inpainter);
}

std::unique_ptr<DepthBackend> make_depth_backend(const PluginConfig& cfg) {
  if (cfg.depth == "oracle_stub") return std::make_unique<OracleDepthStub>();
  if (cfg.depth == "constant_stub") return std::make_unique<ConstantDepthStub>();
  if (cfg.depth == "external") {
    return std::make_unique<ExternalDepth>(cfg.depth_command, cfg.depth_scale);
  }
  throw ConfigError("unknown plugins.depth: " + cfg.depth);
}

}  // namespace pihot
