#ifndef TAVCE_OPS_HPP
#define TAVCE_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tavce/tensor.hpp"

namespace tavce {
namespace detail {

template <typename T>
Tape<T>* resolve_tape(const Tensor<T>& a, const Tensor<T>& b) {
  Tape<T>* ta = a.tape();
  Tape<T>* tb = b.tape();
  if (ta && tb && ta != tb) throw TensorError("op: inputs belong to different tapes");
  return ta ? ta : tb;
}

template <typename T>
bool track(Tape<T>* tape, bool any_requires_grad) {
  return tape != nullptr && tape->recording() && any_requires_grad;
}

template <typename T>
Tensor<T> make_output(const char* op, Tape<T>* tape, Shape shape, std::vector<T> value, bool rg) {
  check_finite(op, value);
  return Tensor<T>::leaf(tape, std::move(shape), std::move(value), rg);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise suite: add, sub, mul, div, scale, relu, sigmoid, tanh.
// Binary ops accept equal shapes or a scalar (1-element) operand on either
// side; the scalar's gradient is the sum over the broadcast positions.
// ---------------------------------------------------------------------------

template <typename T, typename Fwd, typename Bwd>
Tensor<T> binary_elementwise(const char* op, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd,
                             Bwd bwd) {
  const bool a_scalar = a.size() == 1;
  const bool b_scalar = b.size() == 1;
  if (!a_scalar && !b_scalar && a.shape() != b.shape()) {
    throw TensorError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  }
  const Shape& out_shape = a_scalar ? b.shape() : a.shape();
  const std::size_t n = numel(out_shape);
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = fwd(a.value()[a_scalar ? 0 : i], b.value()[b_scalar ? 0 : i]);
  }
  Tape<T>* tape = detail::resolve_tape(a, b);
  bool rg = detail::track(tape, a.requires_grad() || b.requires_grad());
  Tensor<T> result = detail::make_output(op, tape, out_shape, std::move(out), rg);
  if (rg) {
    auto as = a.storage(), bs = b.storage(), os = result.storage();
    tape->push([as, bs, os, a_scalar, b_scalar, bwd, n] {
      for (std::size_t i = 0; i < n; ++i) {
        T da = 0, db = 0;
        bwd(as->value[a_scalar ? 0 : i], bs->value[b_scalar ? 0 : i], os->grad[i], da, db);
        if (as->requires_grad) as->grad[a_scalar ? 0 : i] += da;
        if (bs->requires_grad) bs->grad[b_scalar ? 0 : i] += db;
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "add", a, b, [](T x, T y) { return x + y; },
      [](T, T, T g, T& da, T& db) {
        da = g;
        db = g;
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "sub", a, b, [](T x, T y) { return x - y; },
      [](T, T, T g, T& da, T& db) {
        da = g;
        db = -g;
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "mul", a, b, [](T x, T y) { return x * y; },
      [](T x, T y, T g, T& da, T& db) {
        da = g * y;
        db = g * x;
      });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_elementwise<T>(
      "div", a, b, [](T x, T y) { return x / y; },
      [](T x, T y, T g, T& da, T& db) {
        da = g / y;
        db = -g * x / (y * y);
      });
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary_elementwise(const char* op, const Tensor<T>& a, Fwd fwd, Bwd bwd) {
  const std::size_t n = a.size();
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(a.value()[i]);
  Tape<T>* tape = a.tape();
  bool rg = detail::track(tape, a.requires_grad());
  Tensor<T> result = detail::make_output(op, tape, a.shape(), std::move(out), rg);
  if (rg) {
    auto as = a.storage(), os = result.storage();
    tape->push([as, os, bwd, n] {
      if (!as->requires_grad) return;
      for (std::size_t i = 0; i < n; ++i) as->grad[i] += bwd(as->value[i], os->value[i], os->grad[i]);
    });
  }
  return result;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  return unary_elementwise<T>(
      "scale", a, [c](T x) { return c * x; }, [c](T, T, T g) { return c * g; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  return unary_elementwise<T>(
      "add_scalar", a, [c](T x) { return x + c; }, [](T, T, T g) { return g; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary_elementwise<T>(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T, T g) { return x > T(0) ? g : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary_elementwise<T>(
      "sigmoid", a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y, T g) { return g * y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
  return unary_elementwise<T>(
      "tanh", a, [](T x) { return std::tanh(x); }, [](T, T y, T g) { return g * (T(1) - y * y); });
}

// ---------------------------------------------------------------------------
// Linear suite: matmul, 1x1 conv, 3x3 same-padding conv (stride 1 or 2),
// 2x nearest-neighbor upsample.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    throw TensorError("matmul: both inputs must be rank-2");
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw TensorError("matmul: inner dimension mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  }
  std::vector<T> out(m * n, T(0));
  const T* av = a.value().data();
  const T* bv = b.value().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T aval = av[i * k + p];
      const T* brow = bv + p * n;
      T* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aval * brow[j];
    }
  }
  Tape<T>* tape = detail::resolve_tape(a, b);
  bool rg = detail::track(tape, a.requires_grad() || b.requires_grad());
  Tensor<T> result = detail::make_output("matmul", tape, {m, n}, std::move(out), rg);
  if (rg) {
    auto as = a.storage(), bs = b.storage(), os = result.storage();
    tape->push([as, bs, os, m, k, n] {
      const T* g = os->grad.data();
      if (as->requires_grad) {
        // dA = dC * B^T
        T* ga = as->grad.data();
        const T* bv2 = bs->value.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const T gij = g[i * n + j];
            for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * bv2[p * n + j];
          }
      }
      if (bs->requires_grad) {
        // dB = A^T * dC
        T* gb = bs->grad.data();
        const T* av2 = as->value.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const T aip = av2[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
          }
      }
    });
  }
  return result;
}

// Pointwise convolution over a C_in x H x W map with weight C_out x C_in.
template <typename T>
Tensor<T> conv1x1(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias = nullptr) {
  if (x.shape().size() != 3 || w.shape().size() != 2) {
    throw TensorError("conv1x1: expected CHW input and rank-2 weight");
  }
  const std::size_t cin = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const std::size_t cout = w.shape()[0];
  if (w.shape()[1] != cin) {
    throw TensorError("conv1x1: weight channels " + shape_str(w.shape()) +
                      " do not match input channels " + std::to_string(cin));
  }
  if (bias && bias->size() != cout) throw TensorError("conv1x1: bias size mismatch");
  const std::size_t hw = h * wd;
  std::vector<T> out(cout * hw, T(0));
  for (std::size_t oc = 0; oc < cout; ++oc) {
    T* orow = out.data() + oc * hw;
    if (bias) {
      const T bv = bias->value()[oc];
      for (std::size_t p = 0; p < hw; ++p) orow[p] = bv;
    }
    for (std::size_t ic = 0; ic < cin; ++ic) {
      const T wv = w.value()[oc * cin + ic];
      const T* xrow = x.value().data() + ic * hw;
      for (std::size_t p = 0; p < hw; ++p) orow[p] += wv * xrow[p];
    }
  }
  Tape<T>* tape = detail::resolve_tape(x, w);
  if (bias) tape = tape ? tape : bias->tape();
  bool rg = detail::track(tape, x.requires_grad() || w.requires_grad() ||
                                    (bias && bias->requires_grad()));
  Tensor<T> result = detail::make_output("conv1x1", tape, {cout, h, wd}, std::move(out), rg);
  if (rg) {
    auto xs = x.storage(), ws = w.storage(), os = result.storage();
    auto bst = bias ? bias->storage() : nullptr;
    tape->push([xs, ws, bst, os, cin, cout, hw] {
      const T* g = os->grad.data();
      for (std::size_t oc = 0; oc < cout; ++oc) {
        const T* grow = g + oc * hw;
        if (bst && bst->requires_grad) {
          T s = 0;
          for (std::size_t p = 0; p < hw; ++p) s += grow[p];
          bst->grad[oc] += s;
        }
        for (std::size_t ic = 0; ic < cin; ++ic) {
          const T* xrow = xs->value.data() + ic * hw;
          if (ws->requires_grad) {
            T s = 0;
            for (std::size_t p = 0; p < hw; ++p) s += grow[p] * xrow[p];
            ws->grad[oc * cin + ic] += s;
          }
          if (xs->requires_grad) {
            const T wv = ws->value[oc * cin + ic];
            T* gx = xs->grad.data() + ic * hw;
            for (std::size_t p = 0; p < hw; ++p) gx[p] += wv * grow[p];
          }
        }
      }
    });
  }
  return result;
}

// 3x3 convolution with padding 1. stride 1 keeps H x W; stride 2 halves it
// (floor((H-1)/2)+1). Weight is C_out x C_in x 3 x 3.
template <typename T>
Tensor<T> conv3x3(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias = nullptr,
                  std::size_t stride = 1) {
  if (x.shape().size() != 3 || w.shape().size() != 4 || w.shape()[2] != 3 || w.shape()[3] != 3) {
    throw TensorError("conv3x3: expected CHW input and C_out x C_in x 3 x 3 weight");
  }
  const std::size_t cin = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const std::size_t cout = w.shape()[0];
  if (w.shape()[1] != cin) throw TensorError("conv3x3: kernel/channel mismatch");
  if (bias && bias->size() != cout) throw TensorError("conv3x3: bias size mismatch");
  if (stride != 1 && stride != 2) throw TensorError("conv3x3: stride must be 1 or 2");
  const std::size_t oh = (h - 1) / stride + 1;
  const std::size_t ow = (wd - 1) / stride + 1;
  std::vector<T> out(cout * oh * ow, T(0));
  const T* xv = x.value().data();
  const T* wv = w.value().data();
  for (std::size_t oc = 0; oc < cout; ++oc) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xo = 0; xo < ow; ++xo) {
        T acc = bias ? bias->value()[oc] : T(0);
        for (std::size_t ic = 0; ic < cin; ++ic) {
          for (int ky = 0; ky < 3; ++ky) {
            const long iy = static_cast<long>(y * stride) + ky - 1;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const long ix = static_cast<long>(xo * stride) + kx - 1;
              if (ix < 0 || ix >= static_cast<long>(wd)) continue;
              acc += wv[((oc * cin + ic) * 3 + ky) * 3 + kx] * xv[(ic * h + iy) * wd + ix];
            }
          }
        }
        out[(oc * oh + y) * ow + xo] = acc;
      }
    }
  }
  Tape<T>* tape = detail::resolve_tape(x, w);
  if (bias) tape = tape ? tape : bias->tape();
  bool rg = detail::track(tape, x.requires_grad() || w.requires_grad() ||
                                    (bias && bias->requires_grad()));
  Tensor<T> result = detail::make_output("conv3x3", tape, {cout, oh, ow}, std::move(out), rg);
  if (rg) {
    auto xs = x.storage(), ws = w.storage(), os = result.storage();
    auto bst = bias ? bias->storage() : nullptr;
    tape->push([xs, ws, bst, os, cin, cout, h, wd, oh, ow, stride] {
      const T* g = os->grad.data();
      for (std::size_t oc = 0; oc < cout; ++oc) {
        for (std::size_t y = 0; y < oh; ++y) {
          for (std::size_t xo = 0; xo < ow; ++xo) {
            const T gv = g[(oc * oh + y) * ow + xo];
            if (bst && bst->requires_grad) bst->grad[oc] += gv;
            for (std::size_t ic = 0; ic < cin; ++ic) {
              for (int ky = 0; ky < 3; ++ky) {
                const long iy = static_cast<long>(y * stride) + ky - 1;
                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                for (int kx = 0; kx < 3; ++kx) {
                  const long ix = static_cast<long>(xo * stride) + kx - 1;
                  if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                  const std::size_t widx = ((oc * cin + ic) * 3 + ky) * 3 + kx;
                  const std::size_t xidx = (ic * h + iy) * wd + ix;
                  if (ws->requires_grad) ws->grad[widx] += gv * xs->value[xidx];
                  if (xs->requires_grad) xs->grad[xidx] += gv * ws->value[widx];
                }
              }
            }
          }
        }
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& x) {
  if (x.shape().size() != 3) throw TensorError("upsample2x: expected CHW input");
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  std::vector<T> out(c * 4 * h * w);
  for (std::size_t ic = 0; ic < c; ++ic)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xo = 0; xo < w; ++xo) {
        const T v = x.value()[(ic * h + y) * w + xo];
        const std::size_t base = ic * 4 * h * w;
        out[base + (2 * y) * 2 * w + 2 * xo] = v;
        out[base + (2 * y) * 2 * w + 2 * xo + 1] = v;
        out[base + (2 * y + 1) * 2 * w + 2 * xo] = v;
        out[base + (2 * y + 1) * 2 * w + 2 * xo + 1] = v;
      }
  Tape<T>* tape = x.tape();
  bool rg = detail::track(tape, x.requires_grad());
  Tensor<T> result = detail::make_output("upsample2x", tape, {c, 2 * h, 2 * w}, std::move(out), rg);
  if (rg) {
    auto xs = x.storage(), os = result.storage();
    tape->push([xs, os, c, h, w] {
      if (!xs->requires_grad) return;
      for (std::size_t ic = 0; ic < c; ++ic)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xo = 0; xo < w; ++xo) {
            const std::size_t base = ic * 4 * h * w;
            xs->grad[(ic * h + y) * w + xo] += os->grad[base + (2 * y) * 2 * w + 2 * xo] +
                                               os->grad[base + (2 * y) * 2 * w + 2 * xo + 1] +
                                               os->grad[base + (2 * y + 1) * 2 * w + 2 * xo] +
                                               os->grad[base + (2 * y + 1) * 2 * w + 2 * xo + 1];
          }
    });
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reductions: sum, mean, sum over axis 0, L2 / Frobenius norm.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  if (x.size() == 0) throw TensorError("sum: empty tensor");
  T s = 0;
  for (T v : x.value()) s += v;
  Tape<T>* tape = x.tape();
  bool rg = detail::track(tape, x.requires_grad());
  Tensor<T> result = detail::make_output("sum", tape, {1}, std::vector<T>{s}, rg);
  if (rg) {
    auto xs = x.storage(), os = result.storage();
    tape->push([xs, os] {
      if (!xs->requires_grad) return;
      const T g = os->grad[0];
      for (auto& gx : xs->grad) gx += g;
    });
  }
  return result;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.size() == 0) throw TensorError("mean: empty tensor");
  return scale(sum(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Tensor<T> sum_axis0(const Tensor<T>& x) {
  if (x.shape().size() != 2) throw TensorError("sum_axis0: expected rank-2 input");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (m == 0 || n == 0) throw TensorError("sum_axis0: empty tensor");
  std::vector<T> out(n, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += x.value()[i * n + j];
  Tape<T>* tape = x.tape();
  bool rg = detail::track(tape, x.requires_grad());
  Tensor<T> result = detail::make_output("sum_axis0", tape, {n}, std::move(out), rg);
  if (rg) {
    auto xs = x.storage(), os = result.storage();
    tape->push([xs, os, m, n] {
      if (!xs->requires_grad) return;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) xs->grad[i * n + j] += os->grad[j];
    });
  }
  return result;
}

// sqrt(sum of squares); vector L2 norm and Frobenius norm are the same
// computation over the flat buffer. Gradient at exactly zero is defined as 0.
template <typename T>
Tensor<T> l2_norm(const Tensor<T>& x) {
  if (x.size() == 0) throw TensorError("l2_norm: empty tensor");
  T s = 0;
  for (T v : x.value()) s += v * v;
  const T norm = std::sqrt(s);
  Tape<T>* tape = x.tape();
  bool rg = detail::track(tape, x.requires_grad());
  Tensor<T> result = detail::make_output("l2_norm", tape, {1}, std::vector<T>{norm}, rg);
  if (rg) {
    auto xs = x.storage(), os = result.storage();
    tape->push([xs, os] {
      if (!xs->requires_grad) return;
      const T norm = os->value[0];
      if (norm == T(0)) return;
      const T g = os->grad[0] / norm;
      for (std::size_t i = 0; i < xs->value.size(); ++i) xs->grad[i] += g * xs->value[i];
    });
  }
  return result;
}

// ---------------------------------------------------------------------------
// Shape ops: reshape, flat slice, channel concat, spatial broadcast.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape) {
  if (numel(new_shape) != x.size()) {
    throw TensorError("reshape: element count mismatch " + shape_str(x.shape()) + " -> " +
                      shape_str(new_shape));
  }
  Tape<T>* tape = x.tape();
  bool rg = detail::track(tape, x.requires_grad());
  Tensor<T> result = Tensor<T>::leaf(tape, std::move(new_shape), x.value(), rg);
  if (rg) {
    auto xs = x.storage(), os = result.storage();
    tape->push([xs, os] {
      if (!xs->requires_grad) return;
      for (std::size_t i = 0; i < xs->grad.size(); ++i) xs->grad[i] += os->grad[i];
    });
  }
  return result;
}

// Contiguous range of the flat buffer, returned as a 1-D tensor.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t offset, std::size_t len) {
  if (offset + len > x.size()) throw TensorError("slice: range out of bounds");
  std::vector<T> out(x.value().begin() + offset, x.value().begin() + offset + len);
  Tape<T>* tape = x.tape();
  bool rg = detail::track(tape, x.requires_grad());
  Tensor<T> result = Tensor<T>::leaf(tape, {len}, std::move(out), rg);
  if (rg) {
    auto xs = x.storage(), os = result.storage();
    tape->push([xs, os, offset, len] {
      if (!xs->requires_grad) return;
      for (std::size_t i = 0; i < len; ++i) xs->grad[offset + i] += os->grad[i];
    });
  }
  return result;
}

// Concatenate two CHW maps along the channel axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape().size() != 3 || b.shape().size() != 3 || a.shape()[1] != b.shape()[1] ||
      a.shape()[2] != b.shape()[2]) {
    throw TensorError("concat_channels: incompatible shapes " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  }
  const std::size_t ca = a.shape()[0], cb = b.shape()[0];
  const std::size_t h = a.shape()[1], w = a.shape()[2];
  std::vector<T> out;
  out.reserve((ca + cb) * h * w);
  out.insert(out.end(), a.value().begin(), a.value().end());
  out.insert(out.end(), b.value().begin(), b.value().end());
  Tape<T>* tape = detail::resolve_tape(a, b);
  bool rg = detail::track(tape, a.requires_grad() || b.requires_grad());
  Tensor<T> result = Tensor<T>::leaf(tape, {ca + cb, h, w}, std::move(out), rg);
  if (rg) {
    auto as = a.storage(), bs = b.storage(), os = result.storage();
    const std::size_t na = ca * h * w;
    tape->push([as, bs, os, na] {
      if (as->requires_grad)
        for (std::size_t i = 0; i < na; ++i) as->grad[i] += os->grad[i];
      if (bs->requires_grad)
        for (std::size_t i = 0; i < bs->grad.size(); ++i) bs->grad[i] += os->grad[na + i];
    });
  }
  return result;
}

// Broadcast a D-vector to a D x H x W map (constant over space).
template <typename T>
Tensor<T> broadcast_spatial(const Tensor<T>& v, std::size_t h, std::size_t w) {
  if (v.shape().size() != 1) throw TensorError("broadcast_spatial: expected 1-D input");
  const std::size_t d = v.shape()[0];
  std::vector<T> out(d * h * w);
  for (std::size_t c = 0; c < d; ++c) {
    const T val = v.value()[c];
    for (std::size_t p = 0; p < h * w; ++p) out[c * h * w + p] = val;
  }
  Tape<T>* tape = v.tape();
  bool rg = detail::track(tape, v.requires_grad());
  Tensor<T> result = detail::make_output("broadcast_spatial", tape, {d, h, w}, std::move(out), rg);
  if (rg) {
    auto vs = v.storage(), os = result.storage();
    tape->push([vs, os, d, h, w] {
      if (!vs->requires_grad) return;
      for (std::size_t c = 0; c < d; ++c) {
        T s = 0;
        for (std::size_t p = 0; p < h * w; ++p) s += os->grad[c * h * w + p];
        vs->grad[c] += s;
      }
    });
  }
  return result;
}

// Mean squared error over all elements.
template <typename T>
Tensor<T> mse(const Tensor<T>& pred, const Tensor<T>& target) {
  Tensor<T> d = sub(pred, target);
  return mean(mul(d, d));
}

}  // namespace tavce

#endif  // TAVCE_OPS_HPP
