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

#include <string>

#include <Eigen/Core>

#include "pihot/nn/layers.hpp"

namespace pihot {

// L tokens × d channels.
template <typename T>
using TokenMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-wise softmax(Q·Kᵀ / √d), d = Q.cols(). L_Q × L_K.
template <typename T>
TokenMatrix<T> attention_weights(const TokenMatrix<T>& q, const TokenMatrix<T>& k);

// softmax(Q·Kᵀ / √d)·V. Q and K share their column count d; K and V share
// their row count. V may be wider or narrower than d. Output is L_Q × V.cols().
// Throws ShapeError on mismatch.
template <typename T>
TokenMatrix<T> feature_attention(const TokenMatrix<T>& q, const TokenMatrix<T>& k,
                                 const TokenMatrix<T>& v);

template <typename T>
struct AttentionGrads {
  TokenMatrix<T> dq, dk, dv;
};

// Vector-Jacobian product of feature_attention for upstream gradient `dout`.
template <typename T>
AttentionGrads<T> feature_attention_backward(const TokenMatrix<T>& q, const TokenMatrix<T>& k,
                                             const TokenMatrix<T>& v, const TokenMatrix<T>& dout);

// Flattens image n of an N×C×H×W tensor into (H·W)×C tokens (the expand
// operation), and the inverse.
template <typename T>
TokenMatrix<T> to_tokens(const Tensor<T>& map, int n);
template <typename T>
void from_tokens(const TokenMatrix<T>& tokens, int n, Tensor<T>& map);

namespace nn {
// Per-image feature_attention over NCHW maps: q, k are N×d×H×W (k may have a
// different spatial size than q), v is N×d_v×H_k×W_k. Output N×d_v×H×W.
template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v);
}  // namespace nn

// Instances perspective interaction: object features query contact features.
// Q = E(conv1×1(x_o)), K = E(conv1×1(x_c)), V = E(conv1×1(x_c)).
template <typename T>
class Ipi {
 public:
  Ipi() = default;
  // `channels` of x_o/x_c; `attn_dim` of Q/K. V keeps `channels` so o_a can
  // be fused with x_c.
  Ipi(int channels, int attn_dim, Rng& rng);

  nn::Var<T> operator()(const nn::Var<T>& x_o, const nn::Var<T>& x_c) const;
  void collect(const std::string& prefix, nn::ParamSet<T>& out) const;

  nn::Conv2d<T> query, key, value;
};

// Instances depth space interaction: the relative-position map queries the
// IPI output. Q = E(conv1×1(d_s)), K = E(conv1×1(o_a)), V = E(conv1×1(o_a)).
template <typename T>
class Idsi {
 public:
  Idsi() = default;
  Idsi(int channels, int attn_dim, Rng& rng);

  // d_s: N×1×H×W, o_a: N×C×H×W.
  nn::Var<T> operator()(const nn::Var<T>& d_s, const nn::Var<T>& o_a) const;
  void collect(const std::string& prefix, nn::ParamSet<T>& out) const;

  nn::Conv2d<T> query, key, value;
};

}  // namespace pihot
