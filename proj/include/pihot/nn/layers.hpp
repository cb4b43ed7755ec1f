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
#include <string>
#include <vector>

#include "pihot/nn/ops.hpp"
#include "pihot/rng.hpp"

namespace pihot::nn {

template <typename T>
struct NamedParam {
  std::string name;
  Var<T> var;
};

template <typename T>
struct NamedBuffer {
  std::string name;
  Tensor<T>* tensor;
};

// Flat view over a model's learnable parameters and persistent buffers.
template <typename T>
struct ParamSet {
  std::vector<NamedParam<T>> params;
  std::vector<NamedBuffer<T>> buffers;

  void zero_grad() {
    for (auto& p : params) p.var->zero_grad();
  }
};

// Uniform(−1/√fan_in, 1/√fan_in).
template <typename T>
Tensor<T> uniform_init(Shape shape, int fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in, int out, int kernel, int stride, int pad, bool bias, Rng& rng)
      : stride_(stride), pad_(pad) {
    const int fan_in = in * kernel * kernel;
    weight = parameter(uniform_init<T>({out, in, kernel, kernel}, fan_in, rng));
    if (bias) this->bias = parameter(uniform_init<T>({out}, fan_in, rng));
  }

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, weight, bias, stride_, pad_); }

  void collect(const std::string& prefix, ParamSet<T>& out) const {
    out.params.push_back({prefix + ".weight", weight});
    if (bias) out.params.push_back({prefix + ".bias", bias});
  }

  int in_channels() const { return weight->value.dim(1); }
  int out_channels() const { return weight->value.dim(0); }

  Var<T> weight;
  Var<T> bias;

 private:
  int stride_ = 1;
  int pad_ = 0;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels)
      : gamma(parameter(Tensor<T>({channels}, T(1)))),
        beta(parameter(Tensor<T>({channels}, T(0)))),
        running_mean({channels}, T(0)),
        running_var({channels}, T(1)) {}

  Var<T> operator()(const Var<T>& x, bool training) {
    return batch_norm(x, gamma, beta, running_mean, running_var, training);
  }

  void collect(const std::string& prefix, ParamSet<T>& out) {
    out.params.push_back({prefix + ".gamma", gamma});
    out.params.push_back({prefix + ".beta", beta});
    out.buffers.push_back({prefix + ".running_mean", &running_mean});
    out.buffers.push_back({prefix + ".running_var", &running_var});
  }

  Var<T> gamma;
  Var<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

// conv → batch norm → ReLU, the unit most of the network is built from.
template <typename T>
class ConvBnRelu {
 public:
  ConvBnRelu() = default;
  ConvBnRelu(int in, int out, int kernel, int stride, int pad, Rng& rng)
      : conv(in, out, kernel, stride, pad, /*bias=*/false, rng), bn(out) {}

  Var<T> operator()(const Var<T>& x, bool training) { return relu(bn(conv(x), training)); }

  void collect(const std::string& prefix, ParamSet<T>& out) {
    conv.collect(prefix + ".conv", out);
    bn.collect(prefix + ".bn", out);
  }

  Conv2d<T> conv;
  BatchNorm2d<T> bn;
};

}  // namespace pihot::nn
