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

#include <cstdint>
#include <string>
#include <vector>

#include "pihot/attention.hpp"
#include "pihot/image.hpp"
#include "pihot/nn/layers.hpp"

namespace pihot {

enum class BackboneVariant { kTiny, kResNet50Shape };

std::string to_string(BackboneVariant v);
BackboneVariant parse_backbone_variant(const std::string& s);

struct ModelConfig {
  BackboneVariant backbone = BackboneVariant::kTiny;
  int channels = 32;      // tiny backbone output channels
  int downsample = 8;     // tiny backbone image→feature factor (power of two)
  int resnet_width = 64;  // base width of the resnet50_shape stages
  int attn_dim = 0;       // 0 → use the feature channel count
  int num_classes = 18;   // including background
  double alpha = 0.1;
  double beta = 0.1;
  std::uint64_t seed = 0;
};

struct BackboneConfig {
  BackboneVariant variant = BackboneVariant::kTiny;
  int out_channels = 32;
  int downsample_factor = 8;
  int resnet_width = 64;
};

// resnet50_shape fixes out_channels = 32·width and factor = 32.
BackboneConfig backbone_config(const ModelConfig& cfg);

// Which of the four modules are active. All off is the ablation baseline.
struct AblationFlags {
  bool oi = true;    // off: I_o := I
  bool ipi = true;   // off: o_a := x_o
  bool spo = true;   // off: d_s := 1
  bool idsi = true;  // off: d_a := 0

  bool operator==(const AblationFlags&) const = default;
  static AblationFlags baseline() { return {false, false, false, false}; }
};

struct FusionParams {
  double alpha = 0.1;
  double beta = 0.1;
};

struct LossConfig {
  double background_weight = 0.2;
  std::vector<double> class_weights;  // optional, one per class
  nn::Reduction reduction = nn::Reduction::kMean;

  // w_k = class_weights[k] (or 1) times background_weight for k = 0.
  std::vector<double> weights(int num_classes) const;
};

// Shared feature extractor. The same instance encodes I and I_o.
template <typename T>
class Backbone {
 public:
  Backbone() = default;
  Backbone(const BackboneConfig& cfg, Rng& rng);

  // image: N×3×H×W with H, W divisible by the downsample factor.
  nn::Var<T> operator()(const nn::Var<T>& image, bool training);
  void collect(const std::string& prefix, nn::ParamSet<T>& out);
  const BackboneConfig& config() const { return cfg_; }

 private:
  struct Bottleneck {
    nn::ConvBnRelu<T> reduce, spatial;
    nn::Conv2d<T> expand;
    nn::BatchNorm2d<T> expand_bn;
    bool project = false;
    nn::Conv2d<T> shortcut;
    nn::BatchNorm2d<T> shortcut_bn;
  };

  BackboneConfig cfg_;
  std::vector<nn::ConvBnRelu<T>> tiny_;
  nn::ConvBnRelu<T> stem_;
  std::vector<Bottleneck> blocks_;
};

// Two channel-preserving 3×3 conv → BN → ReLU blocks producing x_c.
template <typename T>
class ContactBranch {
 public:
  ContactBranch() = default;
  ContactBranch(int channels, Rng& rng);
  nn::Var<T> operator()(const nn::Var<T>& x, bool training);
  void collect(const std::string& prefix, nn::ParamSet<T>& out);

  nn::ConvBnRelu<T> first, second;
};

// Three 1×1 conv → BN → ReLU sets, a 1×1 conv to num_classes logits, then
// bilinear upsampling to the image size. Returns logits; apply
// probabilities() for the sigmoid map.
template <typename T>
class SegmentHead {
 public:
  SegmentHead() = default;
  SegmentHead(int channels, int num_classes, Rng& rng);
  nn::Var<T> operator()(const nn::Var<T>& x, int out_h, int out_w, bool training);
  void collect(const std::string& prefix, nn::ParamSet<T>& out);

  std::vector<nn::ConvBnRelu<T>> hidden;
  nn::Conv2d<T> classifier;
};

template <typename T>
struct NetInputs {
  Tensor<T> image;              // N×3×H×W
  Tensor<T> inpainted;          // N×3×H×W (I_o)
  Tensor<T> relative_position;  // N×1×H'×W' (d_s at feature resolution)
};

template <typename T>
struct NetOutputs {
  nn::Var<T> x, x_c, x_o, o_a, d_s, d_a, fused, logits;
};

template <typename T>
class PihotNet {
 public:
  explicit PihotNet(const ModelConfig& cfg);
  PihotNet(const PihotNet&) = delete;
  PihotNet& operator=(const PihotNet&) = delete;

  NetOutputs<T> forward(const NetInputs<T>& in, const AblationFlags& flags, bool training);

  // Views into this object; valid while it lives.
  nn::ParamSet<T> params();

  const ModelConfig& config() const { return cfg_; }
  int feature_channels() const { return backbone.config().out_channels; }
  int downsample_factor() const { return backbone.config().downsample_factor; }

  Backbone<T> backbone;
  ContactBranch<T> contact;
  Ipi<T> ipi;
  Idsi<T> idsi;
  SegmentHead<T> head;

 private:
  ModelConfig cfg_;
};

// Contact perception fusion on plain tensors (x_c, o_a, d_a: N×C×H×W, d_s: N×1×H×W).
template <typename T>
Tensor<T> cpo_fuse(const Tensor<T>& x_c, const Tensor<T>& o_a, const Tensor<T>& d_s,
                   const Tensor<T>& d_a, const FusionParams& params);

// C_y×H×W probabilities in [eps, 1 − eps].
using PredictionMap = Tensor<double>;

inline constexpr double kProbabilityEps = 1e-7;

// Sigmoid of image n's logits, clamped to [eps, 1 − eps].
template <typename T>
PredictionMap probabilities(const Tensor<T>& logits, int n);

// Weighted per-class binary cross-entropy of a probability map against a
// label map (one-hot per channel). Mean or sum over pixels per cfg.
// Throws ShapeError / InvalidArgument on size mismatch or out-of-range labels.
double hot_loss(const PredictionMap& pred, const ContactLabelMap& target, const LossConfig& cfg);

// Per-pixel argmax over channels; ties resolve to the lower class id.
ContactLabelMap predict_labels(const PredictionMap& pred);

}  // namespace pihot
