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
#include <cstdint>
#include <vector>

#include "pihot/nn/layers.hpp"

namespace pihot {

struct AdamOptions {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are parallel to the ParamSet
// order and persist in checkpoints for exact resume.
template <typename T>
class Adam {
 public:
  Adam(const nn::ParamSet<T>& params, AdamOptions opts) : opts_(opts) {
    for (const auto& p : params.params) {
      m_.emplace_back(p.var->value.shape());
      v_.emplace_back(p.var->value.shape());
    }
  }

  void step(nn::ParamSet<T>& params) {
    ++t_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.params.size(); ++i) {
      auto& var = *params.params[i].var;
      if (!var.has_grad()) continue;
      auto& m = m_[i];
      auto& v = v_[i];
      for (size_t j = 0; j < var.value.size(); ++j) {
        const double g = var.grad[j];
        m[j] = static_cast<T>(opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g);
        v[j] = static_cast<T>(opts_.beta2 * v[j] + (1.0 - opts_.beta2) * g * g);
        const double mhat = m[j] / c1;
        const double vhat = v[j] / c2;
        var.value[j] = static_cast<T>(var.value[j] - opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps));
      }
    }
  }

  std::uint64_t steps() const { return t_; }
  void set_steps(std::uint64_t t) { t_ = t; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }
  const AdamOptions& options() const { return opts_; }
  void set_lr(double lr) { opts_.lr = lr; }

 private:
  AdamOptions opts_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace pihot
