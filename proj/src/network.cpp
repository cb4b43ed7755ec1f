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
#include "pihot/network.hpp"

#include <algorithm>
#include <cmath>

namespace pihot {

std::string to_string(BackboneVariant v) {
  return v == BackboneVariant::kTiny ? "tiny" : "resnet50_shape";
}

BackboneVariant parse_backbone_variant(const std::string& s) {
  if (s == "tiny") return BackboneVariant::kTiny;
  if (s == "resnet50_shape") return BackboneVariant::kResNet50Shape;
  throw InvalidArgument("unknown backbone variant: " + s);
}

BackboneConfig backbone_config(const ModelConfig& cfg) {
  BackboneConfig b;
  b.variant = cfg.backbone;
  b.resnet_width = cfg.resnet_width;
  if (cfg.backbone == BackboneVariant::kResNet50Shape) {
    if (cfg.resnet_width < 1) throw InvalidArgument("model.resnet_width must be >= 1");
    b.out_channels = 32 * cfg.resnet_width;
    b.downsample_factor = 32;
  } else {
    if (cfg.downsample < 2 || (cfg.downsample & (cfg.downsample - 1)) != 0) {
      throw InvalidArgument("model.downsample must be a power of two >= 2");
    }
    if (cfg.channels < 1) throw InvalidArgument("model.channels must be >= 1");
    b.out_channels = cfg.channels;
    b.downsample_factor = cfg.downsample;
  }
  return b;
}

std::vector<double> LossConfig::weights(int num_classes) const {
  if (!class_weights.empty() && class_weights.size() != static_cast<size_t>(num_classes)) {
    throw InvalidArgument("loss.class_weights needs " + std::to_string(num_classes) + " entries");
  }
  std::vector<double> w(num_classes, 1.0);
  for (int k = 0; k < num_classes; ++k) {
    if (!class_weights.empty()) w[k] = class_weights[k];
    if (k == 0) w[k] *= background_weight;
    if (!(w[k] > 0) || !std::isfinite(w[k])) throw InvalidArgument("loss weights must be > 0");
  }
  return w;
}

// --- Backbone ---------------------------------------------------------------

template <typename T>
Backbone<T>::Backbone(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.variant == BackboneVariant::kTiny) {
    int blocks = 0;
    for (int f = cfg.downsample_factor; f > 1; f >>= 1) ++blocks;
    int in = 3;
    for (int i = 0; i < blocks; ++i) {
      const int out = std::max(std::min(8, cfg.out_channels), cfg.out_channels >> (blocks - 1 - i));
      tiny_.emplace_back(in, out, 3, 2, 1, rng);
      tiny_.emplace_back(out, out, 3, 1, 1, rng);
      in = out;
    }
    return;
  }
  // ResNet-50 layout: 7×7/2 stem, 3×3/2 max pool, bottleneck stages
  // [3, 4, 6, 3] with expansion 4.
  const int w = cfg.resnet_width;
  stem_ = nn::ConvBnRelu<T>(3, w, 7, 2, 3, rng);
  const int depths[4] = {3, 4, 6, 3};
  int in = w;
  for (int stage = 0; stage < 4; ++stage) {
    const int mid = w << stage;
    const int out = mid * 4;
    for (int i = 0; i < depths[stage]; ++i) {
      const int stride = (i == 0 && stage > 0) ? 2 : 1;
      Bottleneck b;
      b.reduce = nn::ConvBnRelu<T>(in, mid, 1, 1, 0, rng);
      b.spatial = nn::ConvBnRelu<T>(mid, mid, 3, stride, 1, rng);
      b.expand = nn::Conv2d<T>(mid, out, 1, 1, 0, false, rng);
      b.expand_bn = nn::BatchNorm2d<T>(out);
      b.project = stride != 1 || in != out;
      if (b.project) {
        b.shortcut = nn::Conv2d<T>(in, out, 1, stride, 0, false, rng);
        b.shortcut_bn = nn::BatchNorm2d<T>(out);
      }
      blocks_.push_back(std::move(b));
      in = out;
    }
  }
}

template <typename T>
nn::Var<T> Backbone<T>::operator()(const nn::Var<T>& image, bool training) {
  const auto& s = image->value.shape();
  if (s.size() != 4 || s[1] != 3) throw ShapeError("backbone expects N×3×H×W, got " + shape_str(s));
  const int f = cfg_.downsample_factor;
  if (s[2] % f != 0 || s[3] % f != 0) {
    throw ShapeError("image " + dims_str(s[2], s[3]) + " is not divisible by downsample factor " +
                     std::to_string(f));
  }
  if (cfg_.variant == BackboneVariant::kTiny) {
    nn::Var<T> x = image;
    for (auto& block : tiny_) x = block(x, training);
    return x;
  }
  nn::Var<T> x = nn::max_pool2d(stem_(image, training), 3, 2, 1);
  for (auto& b : blocks_) {
    nn::Var<T> y = b.expand_bn(b.expand(b.spatial(b.reduce(x, training), training)), training);
    nn::Var<T> skip = b.project ? b.shortcut_bn(b.shortcut(x), training) : x;
    x = nn::relu(nn::add(y, skip));
  }
  return x;
}

template <typename T>
void Backbone<T>::collect(const std::string& prefix, nn::ParamSet<T>& out) {
  if (cfg_.variant == BackboneVariant::kTiny) {
    for (size_t i = 0; i < tiny_.size(); ++i) tiny_[i].collect(prefix + ".block" + std::to_string(i), out);
    return;
  }
  stem_.collect(prefix + ".stem", out);
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = prefix + ".bottleneck" + std::to_string(i);
    auto& b = blocks_[i];
    b.reduce.collect(p + ".reduce", out);
    b.spatial.collect(p + ".spatial", out);
    b.expand.collect(p + ".expand", out);
    b.expand_bn.collect(p + ".expand_bn", out);
    if (b.project) {
      b.shortcut.collect(p + ".shortcut", out);
      b.shortcut_bn.collect(p + ".shortcut_bn", out);
    }
  }
}

// --- Contact branch / head ----------------------------------------------------

template <typename T>
ContactBranch<T>::ContactBranch(int channels, Rng& rng)
    : first(channels, channels, 3, 1, 1, rng), second(channels, channels, 3, 1, 1, rng) {}

template <typename T>
nn::Var<T> ContactBranch<T>::operator()(const nn::Var<T>& x, bool training) {
  return second(first(x, training), training);
}

template <typename T>
void ContactBranch<T>::collect(const std::string& prefix, nn::ParamSet<T>& out) {
  first.collect(prefix + ".first", out);
  second.collect(prefix + ".second", out);
}

template <typename T>
SegmentHead<T>::SegmentHead(int channels, int num_classes, Rng& rng) {
  for (int i = 0; i < 3; ++i) hidden.emplace_back(channels, channels, 1, 1, 0, rng);
  classifier = nn::Conv2d<T>(channels, num_classes, 1, 1, 0, true, rng);
  classifier.bias->value.fill(T(0));
}

template <typename T>
nn::Var<T> SegmentHead<T>::operator()(const nn::Var<T>& x, int out_h, int out_w, bool training) {
  nn::Var<T> h = x;
  for (auto& layer : hidden) h = layer(h, training);
  return nn::upsample_bilinear(classifier(h), out_h, out_w);
}

template <typename T>
void SegmentHead<T>::collect(const std::string& prefix, nn::ParamSet<T>& out) {
  for (size_t i = 0; i < hidden.size(); ++i) hidden[i].collect(prefix + ".hidden" + std::to_string(i), out);
  classifier.collect(prefix + ".classifier", out);
}

// --- Full network ---------------------------------------------------------------

template <typename T>
PihotNet<T>::PihotNet(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.num_classes < 2 || cfg.num_classes > 256) {
    throw InvalidArgument("model.num_classes must be in [2, 256]");
  }
  if (!std::isfinite(cfg.alpha) || !std::isfinite(cfg.beta)) {
    throw InvalidArgument("fusion weights must be finite");
  }
  const BackboneConfig bcfg = backbone_config(cfg);
  const int c = bcfg.out_channels;
  const int d = cfg.attn_dim > 0 ? cfg.attn_dim : c;
  Rng rng(cfg.seed);
  backbone = Backbone<T>(bcfg, rng);
  contact = ContactBranch<T>(c, rng);
  ipi = Ipi<T>(c, d, rng);
  idsi = Idsi<T>(c, d, rng);
  head = SegmentHead<T>(c, cfg.num_classes, rng);
}

template <typename T>
NetOutputs<T> PihotNet<T>::forward(const NetInputs<T>& in, const AblationFlags& flags,
                                   bool training) {
  if (!in.image.same_shape(in.inpainted)) {
    throw ShapeError("image and inpainted image differ: " + shape_str(in.image.shape()) + " vs " +
                     shape_str(in.inpainted.shape()));
  }
  NetOutputs<T> out;
  const int N = in.image.dim(0), H = in.image.dim(2), W = in.image.dim(3);
  auto image = nn::constant(in.image);
  out.x = backbone(image, training);
  out.x_c = contact(out.x, training);
  // With OI off I_o is I, so the shared backbone would recompute x.
  out.x_o = flags.oi ? backbone(nn::constant(in.inpainted), training) : out.x;
  out.o_a = flags.ipi ? ipi(out.x_o, out.x_c) : out.x_o;

  const auto& fs = out.x->value.shape();
  const Shape ds_shape{N, 1, fs[2], fs[3]};
  if (flags.spo) {
    if (in.relative_position.shape() != ds_shape) {
      throw ShapeError("relative position map must be " + shape_str(ds_shape) + ", got " +
                       shape_str(in.relative_position.shape()));
    }
    out.d_s = nn::constant(in.relative_position);
  } else {
    out.d_s = nn::constant(Tensor<T>(ds_shape, T(1)));
  }
  out.d_a = flags.idsi ? idsi(out.d_s, out.o_a) : nn::constant(Tensor<T>(fs, T(0)));
  out.fused = nn::cpo_fuse(out.x_c, out.o_a, out.d_s, out.d_a, static_cast<T>(cfg_.alpha),
                           static_cast<T>(cfg_.beta));
  out.logits = head(out.fused, H, W, training);
  return out;
}

template <typename T>
nn::ParamSet<T> PihotNet<T>::params() {
  nn::ParamSet<T> set;
  backbone.collect("backbone", set);
  contact.collect("contact", set);
  ipi.collect("ipi", set);
  idsi.collect("idsi", set);
  head.collect("head", set);
  return set;
}

template <typename T>
Tensor<T> cpo_fuse(const Tensor<T>& x_c, const Tensor<T>& o_a, const Tensor<T>& d_s,
                   const Tensor<T>& d_a, const FusionParams& params) {
  return nn::cpo_fuse(nn::constant(x_c), nn::constant(o_a), nn::constant(d_s), nn::constant(d_a),
                      static_cast<T>(params.alpha), static_cast<T>(params.beta))
      ->value;
}

template <typename T>
PredictionMap probabilities(const Tensor<T>& logits, int n) {
  const int C = logits.dim(1), H = logits.dim(2), W = logits.dim(3);
  PredictionMap p({C, H, W});
  const T* src = logits.data() + static_cast<size_t>(n) * C * H * W;
  for (size_t i = 0; i < p.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(src[i])));
    p[i] = std::clamp(s, kProbabilityEps, 1.0 - kProbabilityEps);
  }
  return p;
}

double hot_loss(const PredictionMap& pred, const ContactLabelMap& target, const LossConfig& cfg) {
  if (pred.ndim() != 3) throw ShapeError("prediction must be C×H×W, got " + shape_str(pred.shape()));
  const int C = pred.dim(0), H = pred.dim(1), W = pred.dim(2);
  if (!target.same_dims(H, W)) {
    throw ShapeError("target " + dims_str(target.height, target.width) + " does not match prediction " +
                     dims_str(H, W));
  }
  const auto w = cfg.weights(C);
  for (int v : target.data) {
    if (v < 0 || v >= C) throw InvalidArgument("label " + std::to_string(v) + " out of range");
  }
  const size_t HW = static_cast<size_t>(H) * W;
  double total = 0.0;
  for (int k = 0; k < C; ++k) {
    double acc = 0.0;
    for (size_t i = 0; i < HW; ++i) {
      const double p = std::clamp(pred[k * HW + i], kProbabilityEps, 1.0 - kProbabilityEps);
      const double y = target.data[i] == k ? 1.0 : 0.0;
      acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    total += w[k] * acc;
  }
  return cfg.reduction == nn::Reduction::kMean ? total / static_cast<double>(HW) : total;
}

ContactLabelMap predict_labels(const PredictionMap& pred) {
  const int C = pred.dim(0), H = pred.dim(1), W = pred.dim(2);
  const size_t HW = static_cast<size_t>(H) * W;
  ContactLabelMap out(H, W);
  for (size_t i = 0; i < HW; ++i) {
    int best = 0;
    for (int k = 1; k < C; ++k) {
      if (pred[k * HW + i] > pred[best * HW + i]) best = k;
    }
    out.data[i] = best;
  }
  return out;
}

template class Backbone<float>;
template class Backbone<double>;
template class ContactBranch<float>;
template class ContactBranch<double>;
template class SegmentHead<float>;
template class SegmentHead<double>;
template class PihotNet<float>;
template class PihotNet<double>;
template Tensor<float> cpo_fuse<float>(const Tensor<float>&, const Tensor<float>&,
                                       const Tensor<float>&, const Tensor<float>&,
                                       const FusionParams&);
template Tensor<double> cpo_fuse<double>(const Tensor<double>&, const Tensor<double>&,
                                         const Tensor<double>&, const Tensor<double>&,
                                         const FusionParams&);
template PredictionMap probabilities<float>(const Tensor<float>&, int);
template PredictionMap probabilities<double>(const Tensor<double>&, int);

}  // namespace pihot
