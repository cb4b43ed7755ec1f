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

#include <vector>

#include "pihot/nn/autograd.hpp"

namespace pihot::nn {

// x: N×C×H×W, w: O×C×k×k, b: O or null. Output N×O×OH×OW with
// OH = (H + 2·pad − k) / stride + 1.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad);

// Per-channel normalization over N, H, W. In training mode uses batch
// statistics and updates the running buffers (unbiased variance), otherwise
// normalizes with the running buffers.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  double momentum = 0.1, double eps = 1e-5);

template <typename T>
Var<T> relu(const Var<T>& x);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

// k×k max pooling with implicit −inf padding.
template <typename T>
Var<T> max_pool2d(const Var<T>& x, int kernel, int stride, int pad);

// Bilinear resize with half-pixel centres (align_corners = false).
template <typename T>
Var<T> upsample_bilinear(const Var<T>& x, int out_h, int out_w);

// x = (x_c + α·o_a) ⊙ d_s + (x_c + α·o_a) + β·d_a with d_s (N×1×H×W)
// broadcast across channels.
template <typename T>
Var<T> cpo_fuse(const Var<T>& x_c, const Var<T>& o_a, const Var<T>& d_s, const Var<T>& d_a,
                T alpha, T beta);

// Σ x ⊙ r, a scalar. Used to project outputs onto a fixed direction.
template <typename T>
Var<T> dot(const Var<T>& x, const Tensor<T>& r);

enum class Reduction { kMean, kSum };

// Weighted per-class binary cross-entropy on sigmoid(logits).
// logits: N×C×H×W; labels: N·H·W class ids (< C), one-hot expanded per
// channel; class_weights: C entries. Probabilities are clamped to
// [eps, 1 − eps]. kMean divides the total by N·H·W.
template <typename T>
Var<T> sigmoid_bce(const Var<T>& logits, const std::vector<int>& labels,
                   const std::vector<double>& class_weights, Reduction reduction,
                   double eps = 1e-7);

// Elementwise logistic function (no graph).
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

}  // namespace pihot::nn
