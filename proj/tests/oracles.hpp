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

// Slow, obviously-correct reference implementations. They share no code
// with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pihot/image.hpp"
#include "pihot/rng.hpp"
#include "pihot/tensor.hpp"

namespace pihot::oracle {

// Window max over an n×n neighbourhood, zero outside the frame.
inline BinaryMask dilate(const BinaryMask& m, int n) {
  const int r = n / 2;
  BinaryMask out(m.height, m.width);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      std::uint8_t v = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < m.height && xx >= 0 && xx < m.width) v = std::max(v, m.at(yy, xx));
        }
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

inline Grid<double> relative_position(const Grid<double>& a, const Grid<double>& b) {
  Grid<double> d(a.height, a.width);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) d.at(y, x) = std::fabs(a.at(y, x) - b.at(y, x));
  }
  double lo = d.at(0, 0), hi = d.at(0, 0);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      lo = std::min(lo, d.at(y, x));
      hi = std::max(hi, d.at(y, x));
    }
  }
  Grid<double> out(a.height, a.width, 0.0);
  if (hi == lo) return out;
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) out.at(y, x) = (d.at(y, x) - lo) / (hi - lo);
  }
  return out;
}

using Rows = std::vector<std::vector<double>>;

// softmax(Q Kᵀ / √d) V with explicit loops.
inline Rows attention(const Rows& q, const Rows& k, const Rows& v) {
  const size_t d = q[0].size();
  Rows out(q.size(), std::vector<double>(v[0].size(), 0.0));
  for (size_t i = 0; i < q.size(); ++i) {
    std::vector<double> logits(k.size());
    for (size_t j = 0; j < k.size(); ++j) {
      double s = 0.0;
      for (size_t c = 0; c < d; ++c) s += q[i][c] * k[j][c];
      logits[j] = s / std::sqrt(static_cast<double>(d));
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (auto& l : logits) {
      l = std::exp(l - top);
      z += l;
    }
    for (size_t j = 0; j < k.size(); ++j) {
      for (size_t c = 0; c < v[0].size(); ++c) out[i][c] += logits[j] / z * v[j][c];
    }
  }
  return out;
}

// Image n of an N×C×H×W tensor through a 1×1 conv (weight O×C×1×1, bias O),
// as (H·W)×O token rows.
template <typename T>
Rows project(const Tensor<T>& x, int n, const Tensor<T>& w, const Tensor<T>* b) {
  const int C = x.dim(1), H = x.dim(2), W = x.dim(3), O = w.dim(0);
  Rows out(static_cast<size_t>(H) * W, std::vector<double>(O, 0.0));
  for (int y = 0; y < H; ++y) {
    for (int xx = 0; xx < W; ++xx) {
      for (int o = 0; o < O; ++o) {
        double s = b ? static_cast<double>((*b)[o]) : 0.0;
        for (int c = 0; c < C; ++c) s += static_cast<double>(w[static_cast<size_t>(o) * C + c]) * x.at(n, c, y, xx);
        out[static_cast<size_t>(y) * W + xx][o] = s;
      }
    }
  }
  return out;
}

// x = (x_c + α o_a) d_s + (x_c + α o_a) + β d_a, elementwise, same operation
// order as written.
template <typename T>
Tensor<T> cpo(const Tensor<T>& xc, const Tensor<T>& oa, const Tensor<T>& ds, const Tensor<T>& da, T alpha,
              T beta) {
  Tensor<T> out(xc.shape());
  for (int n = 0; n < xc.dim(0); ++n) {
    for (int c = 0; c < xc.dim(1); ++c) {
      for (int y = 0; y < xc.dim(2); ++y) {
        for (int x = 0; x < xc.dim(3); ++x) {
          const T u = xc.at(n, c, y, x) + alpha * oa.at(n, c, y, x);
          out.at(n, c, y, x) = u * ds.at(n, 0, y, x) + u + beta * da.at(n, c, y, x);
        }
      }
    }
  }
  return out;
}

// Weighted per-class BCE of a C×H×W probability map, mean or sum over pixels.
inline double hot_loss(const Tensor<double>& p, const Grid<int>& y, const std::vector<double>& w, bool mean) {
  const int C = p.dim(0), H = p.dim(1), W = p.dim(2);
  double total = 0.0;
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      for (int k = 0; k < C; ++k) {
        const double q = std::clamp(p[(static_cast<size_t>(k) * H + i) * W + j], 1e-7, 1 - 1e-7);
        const double t = y.at(i, j) == k ? 1.0 : 0.0;
        total -= w[k] * (t * std::log(q) + (1 - t) * std::log(1 - q));
      }
    }
  }
  return mean ? total / (H * W) : total;
}

struct Metrics {
  std::optional<double> sc, c, miou, wiou;
  std::vector<std::optional<double>> iou;
};

// HOT metrics by direct pixel counting, no confusion matrix.
inline Metrics metrics(const std::vector<int>& pred, const std::vector<int>& gt, int classes) {
  Metrics m;
  long contact = 0, same = 0, any = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] > 0) {
      ++contact;
      same += pred[i] == gt[i];
      any += pred[i] > 0;
    }
  }
  if (contact) {
    m.sc = 100.0 * same / contact;
    m.c = 100.0 * any / contact;
  }
  m.iou.assign(classes, std::nullopt);
  double sum = 0, wsum = 0;
  long freq = 0;
  int present = 0;
  for (int k = 1; k < classes; ++k) {
    long inter = 0, uni = 0, g = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
      inter += gt[i] == k && pred[i] == k;
      uni += gt[i] == k || pred[i] == k;
      g += gt[i] == k;
    }
    if (!uni) continue;
    const double iou = static_cast<double>(inter) / uni;
    m.iou[k] = iou;
    sum += iou;
    ++present;
    wsum += g * iou;
    freq += g;
  }
  if (present) m.miou = sum / present;
  if (freq) m.wiou = wsum / freq;
  return m;
}

inline BinaryMask random_mask(int h, int w, double p, Rng& rng) {
  BinaryMask m(h, w);
  for (auto& v : m.data) v = rng.bernoulli(p) ? 1 : 0;
  return m;
}

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

}  // namespace pihot::oracle
