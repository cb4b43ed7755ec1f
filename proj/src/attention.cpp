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
#include "pihot/attention.hpp"

#include <cmath>

namespace pihot {
namespace {

template <typename T>
void check_shapes(const TokenMatrix<T>& q, const TokenMatrix<T>& k, const TokenMatrix<T>& v) {
  if (q.rows() < 1 || q.cols() < 1 || k.rows() < 1 || v.cols() < 1) {
    throw ShapeError("feature_attention: empty token matrix");
  }
  if (q.cols() != k.cols()) {
    throw ShapeError("feature_attention: Q has " + std::to_string(q.cols()) + " columns, K has " +
                     std::to_string(k.cols()));
  }
  if (k.rows() != v.rows()) {
    throw ShapeError("feature_attention: K has " + std::to_string(k.rows()) + " rows, V has " +
                     std::to_string(v.rows()));
  }
}

}  // namespace

template <typename T>
TokenMatrix<T> attention_weights(const TokenMatrix<T>& q, const TokenMatrix<T>& k) {
  if (q.cols() != k.cols()) throw ShapeError("attention_weights: Q/K column mismatch");
  const T scale = T(1) / std::sqrt(static_cast<T>(q.cols()));
  TokenMatrix<T> p = (q * k.transpose()) * scale;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    auto row = p.row(i);
    const T m = row.maxCoeff();
    row = (row.array() - m).exp().matrix();
    row /= row.sum();
  }
  return p;
}

template <typename T>
TokenMatrix<T> feature_attention(const TokenMatrix<T>& q, const TokenMatrix<T>& k,
                                 const TokenMatrix<T>& v) {
  check_shapes(q, k, v);
  return attention_weights(q, k) * v;
}

template <typename T>
AttentionGrads<T> feature_attention_backward(const TokenMatrix<T>& q, const TokenMatrix<T>& k,
                                             const TokenMatrix<T>& v, const TokenMatrix<T>& dout) {
  check_shapes(q, k, v);
  if (dout.rows() != q.rows() || dout.cols() != v.cols()) {
    throw ShapeError("feature_attention_backward: upstream gradient has the wrong shape");
  }
  const TokenMatrix<T> p = attention_weights(q, k);
  const T scale = T(1) / std::sqrt(static_cast<T>(q.cols()));
  AttentionGrads<T> g;
  g.dv.noalias() = p.transpose() * dout;
  TokenMatrix<T> dp = dout * v.transpose();
  // Softmax Jacobian: dS = P ⊙ (dP − rowsum(dP ⊙ P)).
  const auto row_dot = (dp.array() * p.array()).rowwise().sum().eval();
  TokenMatrix<T> ds = (p.array() * (dp.array().colwise() - row_dot)).matrix();
  g.dq.noalias() = (ds * k) * scale;
  g.dk.noalias() = (ds.transpose() * q) * scale;
  return g;
}

template <typename T>
TokenMatrix<T> to_tokens(const Tensor<T>& map, int n) {
  const int C = map.dim(1), H = map.dim(2), W = map.dim(3);
  const int L = H * W;
  TokenMatrix<T> t(L, C);
  const T* base = map.data() + static_cast<size_t>(n) * C * L;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < L; ++i) t(i, c) = base[static_cast<size_t>(c) * L + i];
  }
  return t;
}

template <typename T>
void from_tokens(const TokenMatrix<T>& tokens, int n, Tensor<T>& map) {
  const int C = map.dim(1), L = map.dim(2) * map.dim(3);
  if (tokens.rows() != L || tokens.cols() != C) throw ShapeError("from_tokens: shape mismatch");
  T* base = map.data() + static_cast<size_t>(n) * C * L;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < L; ++i) base[static_cast<size_t>(c) * L + i] = tokens(i, c);
  }
}

namespace {

template <typename T>
void add_from_tokens(const TokenMatrix<T>& tokens, int n, Tensor<T>& map) {
  const int C = map.dim(1), L = map.dim(2) * map.dim(3);
  T* base = map.data() + static_cast<size_t>(n) * C * L;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < L; ++i) base[static_cast<size_t>(c) * L + i] += tokens(i, c);
  }
}

}  // namespace

namespace nn {

template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v) {
  const auto& qs = q->value.shape();
  const auto& ks = k->value.shape();
  const auto& vs = v->value.shape();
  if (qs.size() != 4 || ks.size() != 4 || vs.size() != 4 || qs[0] != ks[0] || ks[0] != vs[0] ||
      ks[2] != vs[2] || ks[3] != vs[3]) {
    throw ShapeError("attention: incompatible maps " + shape_str(qs) + ", " + shape_str(ks) + ", " +
                     shape_str(vs));
  }
  const int N = qs[0];
  Tensor<T> out({N, vs[1], qs[2], qs[3]});
  for (int n = 0; n < N; ++n) {
    from_tokens<T>(feature_attention<T>(to_tokens(q->value, n), to_tokens(k->value, n),
                                        to_tokens(v->value, n)),
                   n, out);
  }
  return make_op<T>(std::move(out), {q, k, v}, [N](Node<T>& self) {
    const auto& q = self.inputs[0];
    const auto& k = self.inputs[1];
    const auto& v = self.inputs[2];
    for (int n = 0; n < N; ++n) {
      const auto g = feature_attention_backward<T>(to_tokens(q->value, n), to_tokens(k->value, n),
                                                   to_tokens(v->value, n), to_tokens(self.grad, n));
      if (q->requires_grad) add_from_tokens(g.dq, n, q->grad_buffer());
      if (k->requires_grad) add_from_tokens(g.dk, n, k->grad_buffer());
      if (v->requires_grad) add_from_tokens(g.dv, n, v->grad_buffer());
    }
  });
}

}  // namespace nn

template <typename T>
Ipi<T>::Ipi(int channels, int attn_dim, Rng& rng)
    : query(channels, attn_dim, 1, 1, 0, true, rng),
      key(channels, attn_dim, 1, 1, 0, true, rng),
      value(channels, channels, 1, 1, 0, true, rng) {}

template <typename T>
nn::Var<T> Ipi<T>::operator()(const nn::Var<T>& x_o, const nn::Var<T>& x_c) const {
  require_same_shape(x_o->value, x_c->value, "ipi");
  return nn::attention(query(x_o), key(x_c), value(x_c));
}

template <typename T>
void Ipi<T>::collect(const std::string& prefix, nn::ParamSet<T>& out) const {
  query.collect(prefix + ".query", out);
  key.collect(prefix + ".key", out);
  value.collect(prefix + ".value", out);
}

template <typename T>
Idsi<T>::Idsi(int channels, int attn_dim, Rng& rng)
    : query(1, attn_dim, 1, 1, 0, true, rng),
      key(channels, attn_dim, 1, 1, 0, true, rng),
      value(channels, channels, 1, 1, 0, true, rng) {}

template <typename T>
nn::Var<T> Idsi<T>::operator()(const nn::Var<T>& d_s, const nn::Var<T>& o_a) const {
  const auto& ds = d_s->value.shape();
  const auto& os = o_a->value.shape();
  if (ds.size() != 4 || os.size() != 4 || ds[0] != os[0] || ds[1] != 1 || ds[2] != os[2] ||
      ds[3] != os[3]) {
    throw ShapeError("idsi: d_s " + shape_str(ds) + " does not match o_a " + shape_str(os));
  }
  return nn::attention(query(d_s), key(o_a), value(o_a));
}

template <typename T>
void Idsi<T>::collect(const std::string& prefix, nn::ParamSet<T>& out) const {
  query.collect(prefix + ".query", out);
  key.collect(prefix + ".key", out);
  value.collect(prefix + ".value", out);
}

#define PIHOT_INSTANTIATE_ATTENTION(T)                                                            \
  template TokenMatrix<T> attention_weights<T>(const TokenMatrix<T>&, const TokenMatrix<T>&);     \
  template TokenMatrix<T> feature_attention<T>(const TokenMatrix<T>&, const TokenMatrix<T>&,      \
                                               const TokenMatrix<T>&);                            \
  template AttentionGrads<T> feature_attention_backward<T>(                                       \
      const TokenMatrix<T>&, const TokenMatrix<T>&, const TokenMatrix<T>&, const TokenMatrix<T>&); \
  template TokenMatrix<T> to_tokens<T>(const Tensor<T>&, int);                                    \
  template void from_tokens<T>(const TokenMatrix<T>&, int, Tensor<T>&);                           \
  template nn::Var<T> nn::attention<T>(const nn::Var<T>&, const nn::Var<T>&, const nn::Var<T>&);  \
  template class Ipi<T>;                                                                          \
  template class Idsi<T>;

PIHOT_INSTANTIATE_ATTENTION(float)
PIHOT_INSTANTIATE_ATTENTION(double)

}  // namespace pihot
