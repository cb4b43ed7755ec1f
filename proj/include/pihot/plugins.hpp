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

#include <memory>
#include <string>

#include "pihot/image.hpp"

namespace pihot {

// Object inpainting seam: removes the masked human and restores what lies
// behind it. Backends are stateless after construction.
class InpainterBackend {
 public:
  virtual ~InpainterBackend() = default;
  virtual std::string name() const = 0;
  // True when pixels outside the mask are returned bit-for-bit.
  virtual bool preserves_unmasked() const = 0;
  // Called by inpaint() after validation.
  virtual ImageTensor run(const ImageTensor& image, const BinaryMask& mask) const = 0;
};

// Monocular depth seam. Output is H×W, finite, >= 0.
class DepthBackend {
 public:
  virtual ~DepthBackend() = default;
  virtual std::string name() const = 0;
  virtual DepthMap run(const ImageTensor& image) const = 0;
};

// Fills masked pixels by onion-peel propagation from unmasked neighbours,
// then refines them with repeated 3×3 averaging until the largest update is
// below `tolerance` or `max_iterations` sweeps have run.
class DiffusionInpainter final : public InpainterBackend {
 public:
  explicit DiffusionInpainter(int max_iterations = 100, double tolerance = 1e-4);
  std::string name() const override { return "diffusion_stub"; }
  bool preserves_unmasked() const override { return true; }
  ImageTensor run(const ImageTensor& image, const BinaryMask& mask) const override;

 private:
  int max_iterations_;
  double tolerance_;
};

// Shells out to a user command. `{image}`, `{mask}` and `{output}` in the
// template are replaced with temp-file paths (RGB PNG, 0/255 mask PNG, RGB PNG).
class ExternalInpainter final : public InpainterBackend {
 public:
  explicit ExternalInpainter(std::string command_template);
  std::string name() const override { return "external"; }
  bool preserves_unmasked() const override { return false; }
  ImageTensor run(const ImageTensor& image, const BinaryMask& mask) const override;

 private:
  std::string command_;
};

// Reads the generator's ground-truth depth from the image sidecar.
class OracleDepthStub final : public DepthBackend {
 public:
  std::string name() const override { return "oracle_stub"; }
  DepthMap run(const ImageTensor& image) const override;
};

class ConstantDepthStub final : public DepthBackend {
 public:
  explicit ConstantDepthStub(double value = 0.5);
  std::string name() const override { return "constant_stub"; }
  DepthMap run(const ImageTensor& image) const override;

 private:
  double value_;
};

// `{image}` and `{output}` placeholders; output is a 16-bit PNG holding
// round(depth * scale).
class ExternalDepth final : public DepthBackend {
 public:
  ExternalDepth(std::string command_template, double scale);
  std::string name() const override { return "external"; }
  DepthMap run(const ImageTensor& image) const override;

 private:
  std::string command_;
  double scale_;
};

// Runs an external human-segmentation command: `{image}` in, `{output}` 0/255 PNG out.
BinaryMask external_human_mask(const std::string& command_template, const ImageTensor& image);

// Validates dimensions and the mask (binary, not all ones), then runs the backend.
ImageTensor inpaint(const InpainterBackend& backend, const ImageTensor& image,
                    const BinaryMask& human_mask);

// Runs the backend and checks the H×W, finite, nonnegative output contract.
DepthMap estimate_depth(const DepthBackend& backend, const ImageTensor& image);

struct PluginConfig {
  std::string inpainter = "diffusion_stub";  // diffusion_stub | external
  std::string depth = "oracle_stub";         // oracle_stub | constant_stub | external
  std::string inpaint_command;
  std::string depth_command;
  std::string mask_command;
  double depth_scale = 1000.0;
};

std::unique_ptr<InpainterBackend> make_inpainter(const PluginConfig& cfg);
std::unique_ptr<DepthBackend> make_depth_backend(const PluginConfig& cfg);

// Replaces every `{key}` in `tmpl` with the shell-quoted value.
std::string expand_command(std::string tmpl,
                           std::initializer_list<std::pair<std::string, std::string>> vars);

}  // namespace pihot
