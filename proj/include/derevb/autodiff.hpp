// derevb/autodiff.hpp

// Copyright 2026  The derevb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode automatic differentiation over dense row-major tensors.
// Templated on the scalar type: float for training, double for
// finite-difference gradient checks.  Backward runs over a topological
// order with per-call local gradient buffers, so repeated backward calls
// accumulate into leaf gradients exactly additively.

#ifndef DEREVB_AUTODIFF_HPP
#define DEREVB_AUTODIFF_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "derevb/errors.hpp"
#include "derevb/fft.hpp"
#include "derevb/stft.hpp"

namespace derevb::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

inline Shape strides_of(const Shape& s) {
  Shape st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

template <typename T>
class Node;

template <typename T>
using Tensor = std::shared_ptr<Node<T>>;

// One tape record: value plus the closure that maps the output gradient to
// input gradients.  Leaves carry a persistent grad buffer; interior nodes
// use per-backward-call local buffers only.
template <typename T>
class Node {
 public:
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // leaves only; lazily sized
  bool requires_grad = false;
  bool is_leaf = true;
  bool frozen = false;
  std::vector<Tensor<T>> inputs;
  // gin[i] is a zero-initialized buffer for inputs[i], or nullptr when that
  // input does not need a gradient.
  std::function<void(const std::vector<T>& gout,
                     const std::vector<std::vector<T>*>& gin)>
      backward_fn;

  std::size_t size() const { return value.size(); }
  bool needs_grad() const { return requires_grad && !frozen; }

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
  void zero_grad() { grad.assign(value.size(), T(0)); }
};

template <typename T>
Tensor<T> make_tensor(Shape shape, std::vector<T> data,
                      bool requires_grad = false) {
  if (numel(shape) != data.size())
    throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                     " != numel" + shape_str(shape));
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return n;
}

template <typename T>
Tensor<T> full(Shape shape, T fill, bool requires_grad = false) {
  std::vector<T> data(numel(shape), fill);
  return make_tensor<T>(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
Tensor<T> scalar(T v, bool requires_grad = false) {
  return make_tensor<T>({1}, {v}, requires_grad);
}

namespace detail {

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> value,
                  std::vector<Tensor<T>> inputs) {
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->is_leaf = false;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->needs_grad();
  n->requires_grad = needs;
  n->inputs = std::move(inputs);
  return n;
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                      const char* what) {
  if (a->shape != b->shape)
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     shape_str(a->shape) + " vs " + shape_str(b->shape));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise arithmetic

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<T> v(a->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a->value[i] + b->value[i];
  auto out = detail::make_op<T>(a->shape, std::move(v), {a, b});
  if (out->requires_grad)
    out->backward_fn = [](const std::vector<T>& g,
                          const std::vector<std::vector<T>*>& gin) {
      for (int s = 0; s < 2; ++s)
        if (gin[s])
          for (std::size_t i = 0; i < g.size(); ++i) (*gin[s])[i] += g[i];
    };
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<T> v(a->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a->value[i] - b->value[i];
  auto out = detail::make_op<T>(a->shape, std::move(v), {a, b});
  if (out->requires_grad)
    out->backward_fn = [](const std::vector<T>& g,
                          const std::vector<std::vector<T>*>& gin) {
      if (gin[0])
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
      if (gin[1])
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[1])[i] -= g[i];
    };
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<T> v(a->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a->value[i] * b->value[i];
  auto out = detail::make_op<T>(a->shape, std::move(v), {a, b});
  if (out->requires_grad) {
    Node<T>*an = a.get(), *bn = b.get();
    out->backward_fn = [an, bn](const std::vector<T>& g,
                                const std::vector<std::vector<T>*>& gin) {
      if (gin[0])
        for (std::size_t i = 0; i < g.size(); ++i)
          (*gin[0])[i] += g[i] * bn->value[i];
      if (gin[1])
        for (std::size_t i = 0; i < g.size(); ++i)
          (*gin[1])[i] += g[i] * an->value[i];
    };
  }
  return out;
}

// out = a * c for a compile-time-constant scalar c.
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  std::vector<T> v(a->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a->value[i] * c;
  auto out = detail::make_op<T>(a->shape, std::move(v), {a});
  if (out->requires_grad)
    out->backward_fn = [c](const std::vector<T>& g,
                           const std::vector<std::vector<T>*>& gin) {
      if (gin[0])
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * c;
    };
  return out;
}

template <typename T>
Tensor<T> add_const(const Tensor<T>& a, T c) {
  std::vector<T> v(a->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a->value[i] + c;
  auto out = detail::make_op<T>(a->shape, std::move(v), {a});
  if (out->requires_grad)
    out->backward_fn = [](const std::vector<T>& g,
                          const std::vector<std::vector<T>*>& gin) {
      if (gin[0])
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
    };
  return out;
}

// out = x * s where s is a one-element tensor (learned gain, loss scaling).
template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& s) {
  if (s->size() != 1) throw ShapeError("scale_by: scale must be one element");
  const T sv = s->value[0];
  std::vector<T> v(x->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x->value[i] * sv;
  auto out = detail::make_op<T>(x->shape, std::move(v), {x, s});
  if (out->requires_grad) {
    Node<T>* xn = x.get();
    out->backward_fn = [sv, xn](const std::vector<T>& g,
                                const std::vector<std::vector<T>*>& gin) {
      if (gin[0])
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i] * sv;
      if (gin[1]) {
        T acc = 0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xn->value[i];
        (*gin[1])[0] += acc;
      }
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// shape manipulation

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape) {
  if (numel(new_shape) != a->size())
    throw ShapeError("reshape: numel mismatch " + shape_str(a->shape) +
                     " -> " + shape_str(new_shape));
  auto out = detail::make_op<T>(std::move(new_shape),
                                std::vector<T>(a->value), {a});
  if (out->requires_grad)
    out->backward_fn = [](const std::vector<T>& g,
                          const std::vector<std::vector<T>*>& gin) {
      if (gin[0])
        for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
    };
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a->shape.size() != 2) throw ShapeError("transpose: expected 2-D");
  const std::size_t m = a->shape[0], n = a->shape[1];
  std::vector<T> v(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) v[j * m + i] = a->value[i * n + j];
  auto out = detail::make_op<T>({n, m}, std::move(v), {a});
  if (out->requires_grad)
    out->backward_fn = [m, n](const std::vector<T>& g,
                              const std::vector<std::vector<T>*>& gin) {
      if (gin[0])
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < m; ++i)
            (*gin[0])[i * n + j] += g[j * m + i];
    };
  return out;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t start,
                std::size_t len) {
  if (axis >= a->shape.size()) throw ShapeError("slice: axis out of range");
  if (start + len > a->shape[axis])
    throw ShapeError("slice: window exceeds axis extent");
  Shape out_shape = a->shape;
  out_shape[axis] = len;
  const auto in_strides = strides_of(a->shape);
  // outer = product of dims before axis, inner = stride along axis
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a->shape[i];
  const std::size_t inner = in_strides[axis];
  const std::size_t in_axis = a->shape[axis];
  std::vector<T> v(numel(out_shape));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < len; ++j) {
      const T* src = a->value.data() + (o * in_axis + start + j) * inner;
      T* dst = v.data() + (o * len + j) * inner;
      std::copy(src, src + inner, dst);
    }
  auto out = detail::make_op<T>(std::move(out_shape), std::move(v), {a});
  if (out->requires_grad)
    out->backward_fn = [outer, inner, in_axis, start, len](
                           const std::vector<T>& g,
                           const std::vector<std::vector<T>*>& gin) {
      if (!gin[0]) return;
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < len; ++j) {
          const T* src = g.data() + (o * len + j) * inner;
          T* dst = gin[0]->data() + (o * in_axis + start + j) * inner;
          for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    };
  return out;
}

template <typename T>
Tensor<T> pad_axis(const Tensor<T>& a, std::size_t axis, std::size_t before,
                   std::size_t after, T fill = T(0)) {
  if (axis >= a->shape.size()) throw ShapeError("pad: axis out of range");
  Shape out_shape = a->shape;
  out_shape[axis] += before + after;
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a->shape[i];
  const std::size_t inner = strides_of(a->shape)[axis];
  const std::size_t in_axis = a->shape[axis];
  const std::size_t out_axis = out_shape[axis];
  std::vector<T> v(numel(out_shape), fill);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < in_axis; ++j) {
      const T* src = a->value.data() + (o * in_axis + j) * inner;
      T* dst = v.data() + (o * out_axis + before + j) * inner;
      std::copy(src, src + inner, dst);
    }
  auto out = detail::make_op<T>(std::move(out_shape), std::move(v), {a});
  if (out->requires_grad)
    out->backward_fn = [outer, inner, in_axis, out_axis, before](
                           const std::vector<T>& g,
                           const std::vector<std::vector<T>*>& gin) {
      if (!gin[0]) return;
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < in_axis; ++j) {
          const T* src = g.data() + (o * out_axis + before + j) * inner;
          T* dst = gin[0]->data() + (o * in_axis + j) * inner;
          for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    };
  return out;
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, std::size_t axis) {
  if (a->shape.size() != b->shape.size())
    throw ShapeError("concat: rank mismatch");
  if (axis >= a->shape.size()) throw ShapeError("concat: axis out of range");
  for (std::size_t i = 0; i < a->shape.size(); ++i)
    if (i != axis && a->shape[i] != b->shape[i])
      throw ShapeError("concat: shapes differ off-axis " +
                       shape_str(a->shape) + " vs " + shape_str(b->shape));
  Shape out_shape = a->shape;
  out_shape[axis] += b->shape[axis];
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= a->shape[i];
  const std::size_t inner = strides_of(a->shape)[axis];
  const std::size_t a_axis = a->shape[axis], b_axis = b->shape[axis];
  const std::size_t o_axis = a_axis + b_axis;
  std::vector<T> v(numel(out_shape));
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy(a->value.data() + o * a_axis * inner,
              a->value.data() + (o + 1) * a_axis * inner,
              v.data() + o * o_axis * inner);
    std::copy(b->value.data() + o * b_axis * inner,
              b->value.data() + (o + 1) * b_axis * inner,
              v.data() + (o * o_axis + a_axis) * inner);
  }
  auto out = detail::make_op<T>(std::move(out_shape), std::move(v), {a, b});
  if (out->requires_grad)
    out->backward_fn = [outer, inner, a_axis, b_axis, o_axis](
                           const std::vector<T>& g,
                           const std::vector<std::vector<T>*>& gin) {
      for (std::size_t o = 0; o < outer; ++o) {
        if (gin[0]) {
          const T* src = g.data() + o * o_axis * inner;
          T* dst = gin[0]->data() + o * a_axis * inner;
          for (std::size_t i = 0; i < a_axis * inner; ++i) dst[i] += src[i];
        }
        if (gin[1]) {
          const T* src = g.data() + (o * o_axis + a_axis) * inner;
          T* dst = gin[1]->data() + o * b_axis * inner;
          for (std::size_t i = 0; i < b_axis * inner; ++i) dst[i] += src[i];
        }
      }
    };
  return out;
}

// General 3-D axis permutation: out[i0,i1,i2] = in at indices reordered by
// perm (out axis d draws from input axis perm[d]).
template <typename T>
Tensor<T> permute3(const Tensor<T>& a, const std::array<std::size_t, 3>& perm) {
  if (a->shape.size() != 3) throw ShapeError("permute3: expected 3-D");
  std::array<bool, 3> seen{};
  for (auto p : perm) {
    if (p > 2 || seen[p]) throw ShapeError("permute3: bad permutation");
    seen[p] = true;
  }
  const Shape& s = a->shape;
  const Shape in_st = strides_of(s);
  Shape out_shape = {s[perm[0]], s[perm[1]], s[perm[2]]};
  std::vector<T> v(a->size());
  std::size_t idx = 0;
  for (std::size_t i = 0; i < out_shape[0]; ++i)
    for (std::size_t j = 0; j < out_shape[1]; ++j)
      for (std::size_t k = 0; k < out_shape[2]; ++k)
        v[idx++] = a->value[i * in_st[perm[0]] + j * in_st[perm[1]] +
                            k * in_st[perm[2]]];
  auto out = detail::make_op<T>(out_shape, std::move(v), {a});
  if (out->requires_grad)
    out->backward_fn = [out_shape, in_st, perm](
                           const std::vector<T>& g,
                           const std::vector<std::vector<T>*>& gin) {
      if (!gin[0]) return;
      std::size_t idx = 0;
      for (std::size_t i = 0; i < out_shape[0]; ++i)
        for (std::size_t j = 0; j < out_shape[1]; ++j)
          for (std::size_t k = 0; k < out_shape[2]; ++k)
            (*gin[0])[i * in_st[perm[0]] + j * in_st[perm[1]] +
                      k * in_st[perm[2]]] += g[idx++];
    };
  return out;
}

// ---------------------------------------------------------------------------
// reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a->value) acc += v;
  auto out = detail::make_op<T>({1}, {acc}, {a});
  if (out->requires_grad)
    out->backward_fn = [n = a->size()](const std::vector<T>& g,
                                       const std::vector<std::vector<T>*>& gin) {
      if (gin[0])
        for (std::size_t i = 0; i < n; ++i) (*gin[0])[i] += g[0];
    };
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a->size()));
}

// Row means of a 2-D tensor: (M, N) -> (M).  Global average pooling is
// reshape to (C, F*T) followed by row_mean.
template <typename T>
Tensor<T> row_mean(const Tensor<T>& a) {
  if (a->shape.size() != 2) throw ShapeError("row_mean: expected 2-D");
  const std::size_t m = a->shape[0], n = a->shape[1];
  std::vector<T> v(m, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T acc = 0;
    const T* row = a->value.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j];
    v[i] = acc / static_cast<T>(n);
  }
  auto out = detail::make_op<T>({m}, std::move(v), {a});
  if (out->requires_grad)
    out->backward_fn = [m, n](const std::vector<T>& g,
                              const std::vector<std::vector<T>*>& gin) {
      if (!gin[0]) return;
      for (std::size_t i = 0; i < m; ++i) {
        const T gi = g[i] / static_cast<T>(n);
        T* row = gin[0]->data() + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += gi;
      }
    };
  return out;
}

// ---------------------------------------------------------------------------
// nonlinearities

namespace detail {

// Shared scaffolding for elementwise y = f(x) with dy/dx expressed from
// (x, y).
template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& a, F f, DF df) {
  std::vector<T> v(a->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(a->value[i]);
  auto out = detail::make_op<T>(a->shape, std::move(v), {a});
  if (out->requires_grad) {
    Node<T>*an = a.get(), *on = out.get();
    out->backward_fn = [an, on, df](const std::vector<T>& g,
                                    const std::vector<std::vector<T>*>& gin) {
      if (!gin[0]) return;
      for (std::size_t i = 0; i < g.size(); ++i)
        (*gin[0])[i] += g[i] * df(an->value[i], on->value[i]);
    };
  }
  return out;
}

}  // namespace detail

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
  return detail::unary(
      a, [](T x) { return std::tanh(x); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return detail::unary(
      a,
      [](T x) {
        return x >= 0 ? T(1) / (T(1) + std::exp(-x))
                      : std::exp(x) / (T(1) + std::exp(x));
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  return detail::unary(
      a,
      [](T x) {
        if (x > T(20)) return x;
        if (x < T(-20)) return std::exp(x);
        return std::log1p(std::exp(x));
      },
      [](T x, T) {
        return x >= 0 ? T(1) / (T(1) + std::exp(-x))
                      : std::exp(x) / (T(1) + std::exp(x));
      });
}

template <typename T>
Tensor<T> exp_op(const Tensor<T>& a) {
  return detail::unary(
      a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log_op(const Tensor<T>& a) {
  for (T v : a->value)
    if (v <= T(0)) throw NumericalError("log: non-positive input");
  return detail::unary(
      a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope = T(0.2)) {
  return detail::unary(
      a, [slope](T x) { return x > 0 ? x : slope * x; },
      [slope](T x, T) { return x > 0 ? T(1) : slope; });
}

// ---------------------------------------------------------------------------
// linear algebra

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a->shape.size() != 2 || b->shape.size() != 2)
    throw ShapeError("matmul: expected 2-D operands");
  const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  if (b->shape[0] != k)
    throw ShapeError("matmul: inner dims " + shape_str(a->shape) + " x " +
                     shape_str(b->shape));
  std::vector<T> v(m * n, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a->value[i * k + p];
      const T* brow = b->value.data() + p * n;
      T* vrow = v.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) vrow[j] += av * brow[j];
    }
  auto out = detail::make_op<T>({m, n}, std::move(v), {a, b});
  if (out->requires_grad) {
    Node<T>*an = a.get(), *bn = b.get();
    out->backward_fn = [an, bn, m, k, n](
                           const std::vector<T>& g,
                           const std::vector<std::vector<T>*>& gin) {
      if (gin[0]) {  // dA = G B^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const T* grow = g.data() + i * n;
            const T* brow = bn->value.data() + p * n;
            T acc = 0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            (*gin[0])[i * k + p] += acc;
          }
      }
      if (gin[1]) {  // dB = A^T G
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t i = 0; i < m; ++i) {
            const T av = an->value[i * k + p];
            const T* grow = g.data() + i * n;
            T* brow = gin[1]->data() + p * n;
            for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
          }
      }
    };
  }
  return out;
}

// Row-wise softmax of a 2-D tensor (attention weights over keys).
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
  if (a->shape.size() != 2) throw ShapeError("softmax: expected 2-D");
  const std::size_t m = a->shape[0], n = a->shape[1];
  std::vector<T> v(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = a->value.data() + i * n;
    T mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    T z = 0;
    for (std::size_t j = 0; j < n; ++j) {
      v[i * n + j] = std::exp(row[j] - mx);
      z += v[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] /= z;
  }
  auto out = detail::make_op<T>(a->shape, std::move(v), {a});
  if (out->requires_grad) {
    Node<T>* on = out.get();
    out->backward_fn = [on, m, n](const std::vector<T>& g,
                                  const std::vector<std::vector<T>*>& gin) {
      if (!gin[0]) return;
      for (std::size_t i = 0; i < m; ++i) {
        const T* y = on->value.data() + i * n;
        const T* gr = g.data() + i * n;
        T dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += gr[j] * y[j];
        T* dst = gin[0]->data() + i * n;
        for (std::size_t j = 0; j < n; ++j) dst[j] += y[j] * (gr[j] - dot);
      }
    };
  }
  return out;
}

// Single-head scaled dot-product attention over rows (tokens); composed
// from primitives so its gradient follows from theirs.
template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k,
                                       const Tensor<T>& v) {
  if (q->shape.size() != 2 || k->shape.size() != 2 || v->shape.size() != 2)
    throw ShapeError("attention: expected 2-D Q/K/V");
  if (q->shape[1] != k->shape[1] || k->shape[0] != v->shape[0])
    throw ShapeError("attention: incompatible Q/K/V shapes");
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(q->shape[1]));
  auto scores = scale(matmul(q, transpose(k)), inv_sqrt_d);
  return matmul(softmax_rows(scores), v);
}

// ---------------------------------------------------------------------------
// convolution and friends (channel-major layout: C x F x T)

// 2-D convolution over (freq, time) with 'same' padding in time, stride 1 in
// time always; freq is 'same' at stride 1 or exactly-halving at stride 2.
// Weight layout: C_out x C_in x KF x KT; odd kernel sizes only.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride_f = 1) {
  if (x->shape.size() != 3) throw ShapeError("conv2d: input must be CxFxT");
  if (w->shape.size() != 4) throw ShapeError("conv2d: weight must be 4-D");
  if (b->shape.size() != 1 || b->shape[0] != w->shape[0])
    throw ShapeError("conv2d: bias must match out channels");
  const std::size_t ci_n = x->shape[0], f_in = x->shape[1], t_n = x->shape[2];
  const std::size_t co_n = w->shape[0], kf = w->shape[2], kt = w->shape[3];
  if (w->shape[1] != ci_n)
    throw ShapeError("conv2d: in-channel mismatch " + shape_str(x->shape) +
                     " vs " + shape_str(w->shape));
  if (kf % 2 == 0 || kt % 2 == 0)
    throw ShapeError("conv2d: kernel sizes must be odd");
  if (stride_f != 1 && stride_f != 2)
    throw ShapeError("conv2d: stride_f must be 1 or 2");
  if (stride_f == 2 && f_in % 2 != 0)
    throw ShapeError("conv2d: stride 2 needs even frequency size");
  const std::size_t f_out = stride_f == 1 ? f_in : f_in / 2;
  const std::size_t pf = kf / 2, pt = kt / 2;
  const std::size_t tp = t_n + 2 * pt;

  // Rows padded by pt zeros on both time edges let the whole time kernel
  // run as one fused pass per row (much less loop start/stop overhead than
  // one pass per tap).
  const auto pad_rows = [tp, t_n, pt](const std::vector<T>& src,
                                      std::size_t n_rows) {
    std::vector<T> padded(n_rows * tp, T(0));
    for (std::size_t r = 0; r < n_rows; ++r)
      std::copy(src.begin() + r * t_n, src.begin() + (r + 1) * t_n,
                padded.begin() + r * tp + pt);
    return padded;
  };

  const std::vector<T> xpad = pad_rows(x->value, ci_n * f_in);
  std::vector<T> v(co_n * f_out * t_n);
  for (std::size_t co = 0; co < co_n; ++co)
    std::fill(v.begin() + co * f_out * t_n, v.begin() + (co + 1) * f_out * t_n,
              b->value[co]);
  for (std::size_t co = 0; co < co_n; ++co)
    for (std::size_t fo = 0; fo < f_out; ++fo) {
      T* __restrict vrow = v.data() + (co * f_out + fo) * t_n;
      for (std::size_t ci = 0; ci < ci_n; ++ci)
        for (std::size_t df = 0; df < kf; ++df) {
          const std::ptrdiff_t fi =
              static_cast<std::ptrdiff_t>(fo * stride_f + df) -
              static_cast<std::ptrdiff_t>(pf);
          if (fi < 0 || fi >= static_cast<std::ptrdiff_t>(f_in)) continue;
          const T* __restrict p =
              xpad.data() + (ci * f_in + static_cast<std::size_t>(fi)) * tp;
          const T* wrow = w->value.data() + ((co * ci_n + ci) * kf + df) * kt;
          if (kt == 3) {
            const T w0 = wrow[0], w1 = wrow[1], w2 = wrow[2];
            for (std::size_t t = 0; t < t_n; ++t)
              vrow[t] += w0 * p[t] + w1 * p[t + 1] + w2 * p[t + 2];
          } else {
            for (std::size_t dt = 0; dt < kt; ++dt) {
              const T wv = wrow[dt];
              if (wv == T(0)) continue;
              for (std::size_t t = 0; t < t_n; ++t) vrow[t] += wv * p[t + dt];
            }
          }
        }
    }

  auto out = detail::make_op<T>({co_n, f_out, t_n}, std::move(v), {x, w, b});
  if (out->requires_grad) {
    Node<T>*xn = x.get(), *wn = w.get();
    const int sf = stride_f;
    out->backward_fn = [xn, wn, ci_n, f_in, t_n, co_n, kf, kt, f_out, pf, pt,
                        tp, sf, pad_rows](const std::vector<T>& g,
                            const std::vector<std::vector<T>*>& gin) {
      if (gin[2]) {
        for (std::size_t co = 0; co < co_n; ++co) {
          T acc = 0;
          const T* grow = g.data() + co * f_out * t_n;
          for (std::size_t i = 0; i < f_out * t_n; ++i) acc += grow[i];
          (*gin[2])[co] += acc;
        }
      }
      if (gin[1]) {
        // d w[co,ci,df,dt] = sum_{fo,t} g[co,fo,t] * x[ci,fi,t+dt-pt]; the
        // padded x rows let one pass accumulate every dt tap at once.
        const std::vector<T> xpad = pad_rows(xn->value, ci_n * f_in);
        for (std::size_t co = 0; co < co_n; ++co)
          for (std::size_t ci = 0; ci < ci_n; ++ci)
            for (std::size_t df = 0; df < kf; ++df) {
              T* wg = gin[1]->data() + ((co * ci_n + ci) * kf + df) * kt;
              for (std::size_t fo = 0; fo < f_out; ++fo) {
                const std::ptrdiff_t fi =
                    static_cast<std::ptrdiff_t>(fo * sf + df) -
                    static_cast<std::ptrdiff_t>(pf);
                if (fi < 0 || fi >= static_cast<std::ptrdiff_t>(f_in))
                  continue;
                const T* __restrict grow = g.data() + (co * f_out + fo) * t_n;
                const T* __restrict p =
                    xpad.data() +
                    (ci * f_in + static_cast<std::size_t>(fi)) * tp;
                if (kt == 3) {
                  T a0 = 0, a1 = 0, a2 = 0;
                  for (std::size_t t = 0; t < t_n; ++t) {
                    const T gv = grow[t];
                    a0 += gv * p[t];
                    a1 += gv * p[t + 1];
                    a2 += gv * p[t + 2];
                  }
                  wg[0] += a0;
                  wg[1] += a1;
                  wg[2] += a2;
                } else {
                  for (std::size_t dt = 0; dt < kt; ++dt) {
                    T acc = 0;
                    for (std::size_t t = 0; t < t_n; ++t)
                      acc += grow[t] * p[t + dt];
                    wg[dt] += acc;
                  }
                }
              }
            }
      }
      if (gin[0]) {
        // d x[ci,fi,u] = sum w[co,ci,df,dt] * g[co,fo,u+2pt-dt] over the
        // (co,df) pairs with fo*sf+df-pf == fi: the forward pattern with a
        // time-flipped kernel over padded gradient rows.
        const std::vector<T> gpad = pad_rows(g, co_n * f_out);
        for (std::size_t ci = 0; ci < ci_n; ++ci)
          for (std::size_t fi = 0; fi < f_in; ++fi) {
            T* __restrict xg = gin[0]->data() + (ci * f_in + fi) * t_n;
            for (std::size_t co = 0; co < co_n; ++co)
              for (std::size_t df = 0; df < kf; ++df) {
                const std::ptrdiff_t num =
                    static_cast<std::ptrdiff_t>(fi + pf) -
                    static_cast<std::ptrdiff_t>(df);
                if (num < 0 || num % sf != 0) continue;
                const std::size_t fo = static_cast<std::size_t>(num) /
                                       static_cast<std::size_t>(sf);
                if (fo >= f_out) continue;
                const T* __restrict gp =
                    gpad.data() + (co * f_out + fo) * tp;
                const T* wrow =
                    wn->value.data() + ((co * ci_n + ci) * kf + df) * kt;
                if (kt == 3) {
                  const T w0 = wrow[0], w1 = wrow[1], w2 = wrow[2];
                  for (std::size_t u = 0; u < t_n; ++u)
                    xg[u] += w0 * gp[u + 2] + w1 * gp[u + 1] + w2 * gp[u];
                } else {
                  for (std::size_t dt = 0; dt < kt; ++dt) {
                    const T wv = wrow[dt];
                    if (wv == T(0)) continue;
                    for (std::size_t u = 0; u < t_n; ++u)
                      xg[u] += wv * gp[u + 2 * pt - dt];
                  }
                }
              }
          }
      }
    };
  }
  return out;
}

// Nearest-neighbor x2 upsampling along the frequency axis.
template <typename T>
Tensor<T> upsample_freq2(const Tensor<T>& x) {
  if (x->shape.size() != 3) throw ShapeError("upsample: input must be CxFxT");
  const std::size_t c_n = x->shape[0], f_n = x->shape[1], t_n = x->shape[2];
  std::vector<T> v(c_n * 2 * f_n * t_n);
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t f = 0; f < f_n; ++f) {
      const T* src = x->value.data() + (c * f_n + f) * t_n;
      T* d0 = v.data() + (c * 2 * f_n + 2 * f) * t_n;
      std::copy(src, src + t_n, d0);
      std::copy(src, src + t_n, d0 + t_n);
    }
  auto out = detail::make_op<T>({c_n, 2 * f_n, t_n}, std::move(v), {x});
  if (out->requires_grad)
    out->backward_fn = [c_n, f_n, t_n](const std::vector<T>& g,
                                       const std::vector<std::vector<T>*>& gin) {
      if (!gin[0]) return;
      for (std::size_t c = 0; c < c_n; ++c)
        for (std::size_t f = 0; f < f_n; ++f) {
          const T* g0 = g.data() + (c * 2 * f_n + 2 * f) * t_n;
          T* dst = gin[0]->data() + (c * f_n + f) * t_n;
          for (std::size_t t = 0; t < t_n; ++t)
            dst[t] += g0[t] + g0[t_n + t];
        }
    };
  return out;
}

// Per-channel normalization over (F, T) with learned per-channel affine.
template <typename T>
Tensor<T> channel_norm(const Tensor<T>& x, const Tensor<T>& gain,
                       const Tensor<T>& bias, T eps = T(1e-5)) {
  if (x->shape.size() != 3) throw ShapeError("norm: input must be CxFxT");
  const std::size_t c_n = x->shape[0], plane = x->shape[1] * x->shape[2];
  if (gain->shape != Shape{c_n} || bias->shape != Shape{c_n})
    throw ShapeError("norm: affine params must be per-channel");
  std::vector<T> v(x->size());
  std::vector<T> mu(c_n), inv_sigma(c_n);
  for (std::size_t c = 0; c < c_n; ++c) {
    const T* src = x->value.data() + c * plane;
    T m = 0;
    for (std::size_t i = 0; i < plane; ++i) m += src[i];
    m /= static_cast<T>(plane);
    T var = 0;
    for (std::size_t i = 0; i < plane; ++i) {
      const T d = src[i] - m;
      var += d * d;
    }
    var /= static_cast<T>(plane);
    mu[c] = m;
    inv_sigma[c] = T(1) / std::sqrt(var + eps);
    T* dst = v.data() + c * plane;
    const T gc = gain->value[c], bc = bias->value[c];
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = (src[i] - m) * inv_sigma[c] * gc + bc;
  }
  auto out = detail::make_op<T>(x->shape, std::move(v), {x, gain, bias});
  if (out->requires_grad) {
    Node<T>*xn = x.get(), *gn = gain.get();
    out->backward_fn = [xn, gn, c_n, plane, mu, inv_sigma](
                           const std::vector<T>& g,
                           const std::vector<std::vector<T>*>& gin) {
      for (std::size_t c = 0; c < c_n; ++c) {
        const T* xrow = xn->value.data() + c * plane;
        const T* grow = g.data() + c * plane;
        const T is = inv_sigma[c], m = mu[c];
        T gsum = 0, gdot = 0;  // sum g, sum g*xhat
        for (std::size_t i = 0; i < plane; ++i) {
          const T xh = (xrow[i] - m) * is;
          gsum += grow[i];
          gdot += grow[i] * xh;
        }
        if (gin[1]) (*gin[1])[c] += gdot;
        if (gin[2]) (*gin[2])[c] += gsum;
        if (gin[0]) {
          const T gc = gn->value[c];
          const T inv_n = T(1) / static_cast<T>(plane);
          T* dst = gin[0]->data() + c * plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const T xh = (xrow[i] - m) * is;
            dst[i] += gc * is * (grow[i] - gsum * inv_n - xh * gdot * inv_n);
          }
        }
      }
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// differentiable iSTFT

// Forward shares the synthesis core with the stft module; backward is the
// adjoint of the same linear map: window + re-segment the normalized output
// gradient, then a forward DFT per frame with one-sided scaling.
template <typename T>
Tensor<T> istft_layer(const Tensor<T>& ri, const StftConfig& cfg,
                      std::size_t out_len) {
  cfg.validate();
  const std::size_t n_bins = static_cast<std::size_t>(cfg.n_bins);
  if (ri->shape.size() != 3 || ri->shape[1] != n_bins || ri->shape[2] != 2)
    throw ShapeError("istft_layer: expected L x " + std::to_string(n_bins) +
                     " x 2, got " + shape_str(ri->shape));
  const std::size_t n_frames = ri->shape[0];
  const std::size_t frame = static_cast<std::size_t>(cfg.frame_len);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_len);
  const std::size_t span = frame + (n_frames - 1) * hop;
  if (out_len == 0 || out_len > span)
    throw ShapeError("istft_layer: out_len must be in [1, frame+(L-1)*hop]");

  std::vector<double> ri_d(ri->value.begin(), ri->value.end());
  std::vector<double> y_d = istft_core(ri_d.data(), n_frames, cfg, out_len);
  std::vector<T> y(y_d.begin(), y_d.end());

  auto out = detail::make_op<T>({out_len}, std::move(y), {ri});
  if (out->requires_grad) {
    // Normalizer of the synthesis overlap-add, recomputed once.
    const auto win = window_coeffs(cfg);
    std::vector<double> norm(out_len, 0.0);
    for (std::size_t l = 0; l < n_frames; ++l)
      for (std::size_t i = 0; i < frame; ++i) {
        const std::size_t n = l * hop + i;
        if (n < out_len) norm[n] += win[i] * win[i];
      }
    out->backward_fn = [n_frames, frame, hop, out_len, win, norm,
                        n_bins](const std::vector<T>& g,
                                const std::vector<std::vector<T>*>& gin) {
      if (!gin[0]) return;
      std::vector<double> ext(out_len);
      for (std::size_t n = 0; n < out_len; ++n)
        ext[n] = norm[n] > 1e-8 ? static_cast<double>(g[n]) / norm[n] : 0.0;
      std::vector<double> seg(frame);
      const double inv_n = 1.0 / static_cast<double>(frame);
      for (std::size_t l = 0; l < n_frames; ++l) {
        for (std::size_t i = 0; i < frame; ++i) {
          const std::size_t n = l * hop + i;
          seg[i] = n < out_len ? win[i] * ext[n] : 0.0;
        }
        const auto bins = fft::rfft(seg.data(), frame, frame);
        T* dst = gin[0]->data() + l * n_bins * 2;
        for (std::size_t k = 0; k < n_bins; ++k) {
          const bool edge = (k == 0 || k == n_bins - 1);
          const double kap = edge ? 1.0 : 2.0;
          dst[2 * k] += static_cast<T>(kap * inv_n * bins[k].real());
          if (!edge) dst[2 * k + 1] += static_cast<T>(kap * inv_n * bins[k].imag());
        }
      }
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// backward pass

namespace detail {

template <typename T>
std::vector<Node<T>*> topo_order(Node<T>* root) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> done;
  // Iterative post-order DFS; second visit emits the node.
  std::vector<std::pair<Node<T>*, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [node, expanded] = stack.back();
    stack.pop_back();
    if (done.count(node)) continue;
    if (expanded) {
      done.insert(node);
      order.push_back(node);
      continue;
    }
    stack.push_back({node, true});
    for (const auto& in : node->inputs)
      if (!done.count(in.get())) stack.push_back({in.get(), false});
  }
  return order;  // inputs before outputs
}

}  // namespace detail

// Reverse-mode sweep from a scalar loss.  Leaf gradients accumulate into the
// persistent buffers; interior gradients live only for the duration of the
// call, so two backward calls double the leaf gradients exactly.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss->size() != 1) throw InvalidInput("backward: loss must be scalar");
  if (!loss->requires_grad) return;  // nothing reachable wants gradients

  auto order = detail::topo_order(loss.get());
  std::unordered_map<Node<T>*, std::vector<T>> local;
  local[loss.get()] = {T(1)};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->requires_grad) continue;
    auto found = local.find(node);
    if (found == local.end()) continue;  // no gradient flowed here
    // Element references stay valid across rehashing; iterators do not.
    std::vector<T>& gout = found->second;
    if (node->is_leaf) {
      if (!node->frozen) {
        node->ensure_grad();
        for (std::size_t i = 0; i < gout.size(); ++i)
          node->grad[i] += gout[i];
      }
      local.erase(node);
      continue;
    }
    if (!node->backward_fn)
      throw GraphError("backward: interior node without backward record");
    std::vector<std::vector<T>*> gin(node->inputs.size(), nullptr);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      Node<T>* in = node->inputs[i].get();
      if (!in->requires_grad) continue;
      auto& buf = local[in];
      if (buf.size() != in->size()) buf.assign(in->size(), T(0));
      gin[i] = &buf;
    }
    node->backward_fn(gout, gin);
    local.erase(node);  // free as we go
  }
}

// ---------------------------------------------------------------------------
// parameters and optimizer

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;

  bool frozen() const { return tensor->frozen; }
  void set_frozen(bool f) { tensor->frozen = f; }
};

template <typename T>
Parameter<T> make_parameter(std::string name, Shape shape,
                            std::vector<T> data) {
  Parameter<T> p;
  p.name = std::move(name);
  p.tensor = make_tensor<T>(std::move(shape), std::move(data), true);
  return p;
}

template <typename T>
void zero_grad(std::vector<Parameter<T>>& params) {
  for (auto& p : params) p.tensor->zero_grad();
}

template <typename T>
struct AdamConfig {
  T lr = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
};

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  long long t = 0;
};

// Standard Adam with bias correction; frozen parameters are skipped
// entirely (moments untouched).
template <typename T>
void adam_step(std::vector<Parameter<T>>& params, AdamState<T>& state,
               const AdamConfig<T>& cfg) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].tensor->size(), T(0));
      state.v[i].assign(params[i].tensor->size(), T(0));
    }
    state.t = 0;
  }
  ++state.t;
  const T bc1 = T(1) - std::pow(cfg.beta1, static_cast<T>(state.t));
  const T bc2 = T(1) - std::pow(cfg.beta2, static_cast<T>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& node = *params[i].tensor;
    if (node.frozen) continue;
    node.ensure_grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < node.value.size(); ++j) {
      const T g = node.grad[j];
      m[j] = cfg.beta1 * m[j] + (T(1) - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (T(1) - cfg.beta2) * g * g;
      const T mhat = m[j] / bc1;
      const T vhat = v[j] / bc2;
      node.value[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace derevb::ad

#endif  // DEREVB_AUTODIFF_HPP
