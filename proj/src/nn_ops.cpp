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
#include "pihot/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace pihot::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require_4d(const Shape& s, const char* what) {
  if (s.size() != 4) throw ShapeError(std::string(what) + ": expected NCHW, got " + shape_str(s));
}

struct ConvGeom {
  int c, h, w, k, stride, pad, oh, ow;
  int rows() const { return c * k * k; }
  int cols() const { return oh * ow; }
};

template <typename T>
void im2col(const T* x, const ConvGeom& g, T* col) {
  const int P = g.cols();
  for (int c = 0; c < g.c; ++c) {
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        T* dst = col + static_cast<size_t>((c * g.k + ki) * g.k + kj) * P;
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          T* row = dst + oy * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(row, row + g.ow, T(0));
            continue;
          }
          const T* src = x + (static_cast<size_t>(c) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            row[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeom& g, T* dx) {
  const int P = g.cols();
  for (int c = 0; c < g.c; ++c) {
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        const T* src = col + static_cast<size_t>((c * g.k + ki) * g.k + kj) * P;
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.h) continue;
          T* dst = dx + (static_cast<size_t>(c) * g.h + iy) * g.w;
          const T* row = src + oy * g.ow;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.w) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
  const auto& xs = x->value.shape();
  const auto& ws = w->value.shape();
  require_4d(xs, "conv2d input");
  require_4d(ws, "conv2d weight");
  if (ws[1] != xs[1] || ws[2] != ws[3]) {
    throw ShapeError("conv2d: weight " + shape_str(ws) + " incompatible with input " + shape_str(xs));
  }
  if (stride < 1 || pad < 0) throw InvalidArgument("conv2d: bad stride/pad");
  const int N = xs[0];
  const int O = ws[0];
  ConvGeom g{xs[1], xs[2], xs[3], ws[2], stride, pad, 0, 0};
  g.oh = (g.h + 2 * pad - g.k) / stride + 1;
  g.ow = (g.w + 2 * pad - g.k) / stride + 1;
  if (g.oh < 1 || g.ow < 1) throw ShapeError("conv2d: input " + shape_str(xs) + " too small");
  if (b && (b->value.ndim() != 1 || b->value.dim(0) != O)) throw ShapeError("conv2d: bad bias");

  const int K = g.rows();
  const int P = g.cols();
  const bool pointwise = g.k == 1 && stride == 1 && pad == 0;
  const size_t in_stride = static_cast<size_t>(g.c) * g.h * g.w;
  const size_t out_stride = static_cast<size_t>(O) * P;

  Tensor<T> y({N, O, g.oh, g.ow});
  std::vector<T> col(pointwise ? 0 : static_cast<size_t>(K) * P);
  ConstMatMap<T> wm(w->value.data(), O, K);
  for (int n = 0; n < N; ++n) {
    const T* xn = x->value.data() + n * in_stride;
    if (!pointwise) im2col(xn, g, col.data());
    ConstMatMap<T> cm(pointwise ? xn : col.data(), K, P);
    MatMap<T> ym(y.data() + n * out_stride, O, P);
    ym.noalias() = wm * cm;
    if (b) {
      for (int o = 0; o < O; ++o) ym.row(o).array() += b->value[o];
    }
  }

  return make_op<T>(std::move(y), {x, w, b}, [g, N, O, K, P, pointwise, in_stride,
                                            out_stride](Node<T>& self) {
    const auto& x = self.inputs[0];
    const auto& w = self.inputs[1];
    const auto& b = self.inputs[2];
    std::vector<T> col(pointwise ? 0 : static_cast<size_t>(K) * P);
    RowMat<T> dcol;
    ConstMatMap<T> wm(w->value.data(), O, K);
    for (int n = 0; n < N; ++n) {
      ConstMatMap<T> dy(self.grad.data() + n * out_stride, O, P);
      const T* xn = x->value.data() + n * in_stride;
      if (w->requires_grad) {
        if (!pointwise) im2col(xn, g, col.data());
        ConstMatMap<T> cm(pointwise ? xn : col.data(), K, P);
        MatMap<T> dw(w->grad_buffer().data(), O, K);
        dw.noalias() += dy * cm.transpose();
      }
      if (b && b->requires_grad) {
        auto& db = b->grad_buffer();
        for (int o = 0; o < O; ++o) db[o] += dy.row(o).sum();
      }
      if (x->requires_grad) {
        T* dx = x->grad_buffer().data() + n * in_stride;
        if (pointwise) {
          MatMap<T> dxm(dx, K, P);
          dxm.noalias() += wm.transpose() * dy;
        } else {
          dcol.noalias() = wm.transpose() * dy;
          col2im_add(dcol.data(), g, dx);
        }
      }
    }
  });
}

template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  double momentum, double eps) {
  const auto& xs = x->value.shape();
  require_4d(xs, "batch_norm input");
  const int N = xs[0], C = xs[1], HW = xs[2] * xs[3];
  if (gamma->value.size() != static_cast<size_t>(C) || beta->value.size() != static_cast<size_t>(C) ||
      running_mean.size() != static_cast<size_t>(C) || running_var.size() != static_cast<size_t>(C)) {
    throw ShapeError("batch_norm: parameter size does not match channel count " + std::to_string(C));
  }
  const size_t M = static_cast<size_t>(N) * HW;
  if (training && M < 2) throw ShapeError("batch_norm: training needs more than one value per channel");

  std::vector<double> mean(C), invstd(C);
  for (int c = 0; c < C; ++c) {
    if (training) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = x->value.data() + (static_cast<size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) s += p[i];
      }
      const double m = s / M;
      double v = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = x->value.data() + (static_cast<size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) v += (p[i] - m) * (p[i] - m);
      }
      const double var = v / M;
      mean[c] = m;
      invstd[c] = 1.0 / std::sqrt(var + eps);
      running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * m);
      running_var[c] =
          static_cast<T>((1.0 - momentum) * running_var[c] + momentum * v / static_cast<double>(M - 1));
    } else {
      mean[c] = running_mean[c];
      invstd[c] = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + eps);
    }
  }

  Tensor<T> y(xs);
  Tensor<T> xhat(xs);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const size_t off = (static_cast<size_t>(n) * C + c) * HW;
      const double gm = gamma->value[c];
      const double bt = beta->value[c];
      for (int i = 0; i < HW; ++i) {
        const double h = (x->value[off + i] - mean[c]) * invstd[c];
        xhat[off + i] = static_cast<T>(h);
        y[off + i] = static_cast<T>(gm * h + bt);
      }
    }
  }

  return make_op<T>(std::move(y), {x, gamma, beta},
                    [xhat = std::move(xhat), invstd, training, N, C, HW, M](Node<T>& self) {
    const auto& x = self.inputs[0];
    const auto& gamma = self.inputs[1];
    const auto& beta = self.inputs[2];
    const auto& g = self.grad;
    for (int c = 0; c < C; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (int n = 0; n < N; ++n) {
        const size_t off = (static_cast<size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) {
          sum_g += g[off + i];
          sum_gx += static_cast<double>(g[off + i]) * xhat[off + i];
        }
      }
      if (gamma->requires_grad) gamma->grad_buffer()[c] += static_cast<T>(sum_gx);
      if (beta->requires_grad) beta->grad_buffer()[c] += static_cast<T>(sum_g);
      if (!x->requires_grad) continue;
      auto& dx = x->grad_buffer();
      const double gm = gamma->value[c];
      for (int n = 0; n < N; ++n) {
        const size_t off = (static_cast<size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) {
          double d;
          if (training) {
            d = gm * invstd[c] / M * (M * static_cast<double>(g[off + i]) - sum_g - xhat[off + i] * sum_gx);
          } else {
            d = gm * invstd[c] * g[off + i];
          }
          dx[off + i] += static_cast<T>(d);
        }
      }
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> y = x->value;
  for (auto& v : y.values()) v = v > T(0) ? v : T(0);
  return make_op<T>(std::move(y), {x}, [](Node<T>& self) {
    auto& x = self.inputs[0];
    auto& dx = x->grad_buffer();
    for (size_t i = 0; i < dx.size(); ++i) {
      if (x->value[i] > T(0)) dx[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor<T> y = a->value;
  for (size_t i = 0; i < y.size(); ++i) y[i] += b->value[i];
  return make_op<T>(std::move(y), {a, b}, [](Node<T>& self) {
    for (int k = 0; k < 2; ++k) {
      auto& in = self.inputs[k];
      if (!in->requires_grad) continue;
      auto& d = in->grad_buffer();
      for (size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> max_pool2d(const Var<T>& x, int kernel, int stride, int pad) {
  const auto& xs = x->value.shape();
  require_4d(xs, "max_pool2d input");
  const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const int OH = (H + 2 * pad - kernel) / stride + 1;
  const int OW = (W + 2 * pad - kernel) / stride + 1;
  if (OH < 1 || OW < 1) throw ShapeError("max_pool2d: input too small " + shape_str(xs));
  Tensor<T> y({N, C, OH, OW});
  std::vector<size_t> argmax(y.size());
  size_t o = 0;
  for (int nc = 0; nc < N * C; ++nc) {
    const size_t base = static_cast<size_t>(nc) * H * W;
    for (int oy = 0; oy < OH; ++oy) {
      for (int ox = 0; ox < OW; ++ox, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        size_t best_i = base;
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= W) continue;
            const size_t i = base + static_cast<size_t>(iy) * W + ix;
            if (x->value[i] > best) {
              best = x->value[i];
              best_i = i;
            }
          }
        }
        y[o] = best;
        argmax[o] = best_i;
      }
    }
  }
  return make_op<T>(std::move(y), {x}, [argmax = std::move(argmax)](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    for (size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += self.grad[i];
  });
}

namespace {

struct LerpTable {
  std::vector<int> lo, hi;
  std::vector<double> frac;
};

LerpTable make_lerp(int in, int out) {
  LerpTable t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - lo;
  }
  return t;
}

}  // namespace

template <typename T>
Var<T> upsample_bilinear(const Var<T>& x, int out_h, int out_w) {
  const auto& xs = x->value.shape();
  require_4d(xs, "upsample_bilinear input");
  if (out_h < 1 || out_w < 1) throw InvalidArgument("upsample_bilinear: bad output size");
  const int NC = xs[0] * xs[1], H = xs[2], W = xs[3];
  const LerpTable ty = make_lerp(H, out_h);
  const LerpTable tx = make_lerp(W, out_w);
  Tensor<T> y({xs[0], xs[1], out_h, out_w});
  for (int nc = 0; nc < NC; ++nc) {
    const T* src = x->value.data() + static_cast<size_t>(nc) * H * W;
    T* dst = y.data() + static_cast<size_t>(nc) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const T* r0 = src + static_cast<size_t>(ty.lo[oy]) * W;
      const T* r1 = src + static_cast<size_t>(ty.hi[oy]) * W;
      const T fy = static_cast<T>(ty.frac[oy]);
      for (int ox = 0; ox < out_w; ++ox) {
        const T fx = static_cast<T>(tx.frac[ox]);
        const T top = r0[tx.lo[ox]] + fx * (r0[tx.hi[ox]] - r0[tx.lo[ox]]);
        const T bot = r1[tx.lo[ox]] + fx * (r1[tx.hi[ox]] - r1[tx.lo[ox]]);
        dst[oy * out_w + ox] = top + fy * (bot - top);
      }
    }
  }
  return make_op<T>(std::move(y), {x}, [ty, tx, NC, H, W, out_h, out_w](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    for (int nc = 0; nc < NC; ++nc) {
      T* d = dx.data() + static_cast<size_t>(nc) * H * W;
      const T* g = self.grad.data() + static_cast<size_t>(nc) * out_h * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        const T fy = static_cast<T>(ty.frac[oy]);
        T* r0 = d + static_cast<size_t>(ty.lo[oy]) * W;
        T* r1 = d + static_cast<size_t>(ty.hi[oy]) * W;
        for (int ox = 0; ox < out_w; ++ox) {
          const T fx = static_cast<T>(tx.frac[ox]);
          const T gv = g[oy * out_w + ox];
          const T gt = gv * (T(1) - fy);
          const T gb = gv * fy;
          r0[tx.lo[ox]] += gt * (T(1) - fx);
          r0[tx.hi[ox]] += gt * fx;
          r1[tx.lo[ox]] += gb * (T(1) - fx);
          r1[tx.hi[ox]] += gb * fx;
        }
      }
    }
  });
}

template <typename T>
Var<T> cpo_fuse(const Var<T>& x_c, const Var<T>& o_a, const Var<T>& d_s, const Var<T>& d_a,
                T alpha, T beta) {
  const auto& s = x_c->value.shape();
  require_4d(s, "cpo_fuse x_c");
  require_same_shape(x_c->value, o_a->value, "cpo_fuse o_a");
  require_same_shape(x_c->value, d_a->value, "cpo_fuse d_a");
  const Shape ds_shape{s[0], 1, s[2], s[3]};
  if (d_s->value.shape() != ds_shape) {
    throw ShapeError("cpo_fuse: d_s must be " + shape_str(ds_shape) + ", got " +
                     shape_str(d_s->value.shape()));
  }
  const int N = s[0], C = s[1], HW = s[2] * s[3];
  Tensor<T> y(s);
  for (int n = 0; n < N; ++n) {
    const T* ds = d_s->value.data() + static_cast<size_t>(n) * HW;
    for (int c = 0; c < C; ++c) {
      const size_t off = (static_cast<size_t>(n) * C + c) * HW;
      for (int i = 0; i < HW; ++i) {
        const T u = x_c->value[off + i] + alpha * o_a->value[off + i];
        y[off + i] = u * ds[i] + u + beta * d_a->value[off + i];
      }
    }
  }
  return make_op<T>(std::move(y), {x_c, o_a, d_s, d_a}, [alpha, beta, N, C, HW](Node<T>& self) {
    const auto& xc = self.inputs[0];
    const auto& oa = self.inputs[1];
    const auto& ds = self.inputs[2];
    const auto& da = self.inputs[3];
    for (int n = 0; n < N; ++n) {
      const T* s = ds->value.data() + static_cast<size_t>(n) * HW;
      for (int c = 0; c < C; ++c) {
        const size_t off = (static_cast<size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) {
          const T g = self.grad[off + i];
          const T du = g * (s[i] + T(1));
          if (xc->requires_grad) xc->grad_buffer()[off + i] += du;
          if (oa->requires_grad) oa->grad_buffer()[off + i] += alpha * du;
          if (da->requires_grad) da->grad_buffer()[off + i] += beta * g;
          if (ds->requires_grad) {
            const T u = xc->value[off + i] + alpha * oa->value[off + i];
            ds->grad_buffer()[static_cast<size_t>(n) * HW + i] += g * u;
          }
        }
      }
    }
  });
}

template <typename T>
Var<T> dot(const Var<T>& x, const Tensor<T>& r) {
  require_same_shape(x->value, r, "dot");
  double s = 0.0;
  for (size_t i = 0; i < r.size(); ++i) s += static_cast<double>(x->value[i]) * r[i];
  Tensor<T> y({1}, static_cast<T>(s));
  return make_op<T>(std::move(y), {x}, [r](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    const T g = self.grad[0];
    for (size_t i = 0; i < r.size(); ++i) dx[i] += g * r[i];
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.values()) v = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  return y;
}

template <typename T>
Var<T> sigmoid_bce(const Var<T>& logits, const std::vector<int>& labels,
                   const std::vector<double>& class_weights, Reduction reduction, double eps) {
  const auto& s = logits->value.shape();
  require_4d(s, "sigmoid_bce logits");
  const int N = s[0], C = s[1], HW = s[2] * s[3];
  if (labels.size() != static_cast<size_t>(N) * HW) {
    throw ShapeError("sigmoid_bce: label count does not match logits " + shape_str(s));
  }
  if (class_weights.size() != static_cast<size_t>(C)) {
    throw ShapeError("sigmoid_bce: need one weight per class");
  }
  for (int l : labels) {
    if (l < 0 || l >= C) throw InvalidArgument("sigmoid_bce: label " + std::to_string(l) + " out of range");
  }
  const double norm = reduction == Reduction::kMean ? 1.0 / (static_cast<double>(N) * HW) : 1.0;

  Tensor<T> grad_cache(s);
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const size_t off = (static_cast<size_t>(n) * C + c) * HW;
      const double w = class_weights[c];
      double acc = 0.0;
      for (int i = 0; i < HW; ++i) {
        const double z = logits->value[off + i];
        const double p = std::clamp(1.0 / (1.0 + std::exp(-z)), eps, 1.0 - eps);
        const double y = labels[static_cast<size_t>(n) * HW + i] == c ? 1.0 : 0.0;
        acc -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
        grad_cache[off + i] = static_cast<T>(w * (p - y) * norm);
      }
      total += w * acc;
    }
  }
  Tensor<T> out({1}, static_cast<T>(total * norm));
  return make_op<T>(std::move(out), {logits}, [gc = std::move(grad_cache)](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    const T g = self.grad[0];
    for (size_t i = 0; i < gc.size(); ++i) dx[i] += g * gc[i];
  });
}

#define PIHOT_INSTANTIATE_OPS(T)                                                                 \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int, int);              \
  template Var<T> batch_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&, Tensor<T>&,        \
                                Tensor<T>&, bool, double, double);                               \
  template Var<T> relu<T>(const Var<T>&);                                                        \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                          \
  template Var<T> max_pool2d<T>(const Var<T>&, int, int, int);                                   \
  template Var<T> upsample_bilinear<T>(const Var<T>&, int, int);                                 \
  template Var<T> cpo_fuse<T>(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&, T, T); \
  template Var<T> dot<T>(const Var<T>&, const Tensor<T>&);                                       \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                               \
  template Var<T> sigmoid_bce<T>(const Var<T>&, const std::vector<int>&,                         \
                                 const std::vector<double>&, Reduction, double);

PIHOT_INSTANTIATE_OPS(float)
PIHOT_INSTANTIATE_OPS(double)

}  // namespace pihot::nn
