#ifndef TAVCE_ENCODERS_HPP
#define TAVCE_ENCODERS_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "tavce/correlation.hpp"
#include "tavce/ops.hpp"
#include "tavce/rng.hpp"
#include "tavce/tensor.hpp"

namespace tavce {

struct Dims {
  std::size_t a_dim = 64;  // audio clip length
  std::size_t d = 16;      // embedding dimension
  std::size_t c = 32;      // feature map channels
  std::size_t img = 32;    // frame side length

  std::size_t map_side() const { return img / 4; }

  void validate() const {
    if (a_dim == 0 || d < 2 || c == 0) throw TensorError("dims: non-positive dimension");
    if (img < 4 || img % 4 != 0) throw TensorError("dims: frame side must be a multiple of 4");
  }
};

inline constexpr std::size_t kAudioHidden = 32;
inline constexpr std::size_t kVisualHidden = 64;
inline constexpr std::size_t kFeatureHidden = 16;
inline constexpr std::size_t kRenderHidden = 16;

// Named parameter tensors for the audio encoder E_a, visual encoder E_v,
// spatial extractor E_f, the CERL fusion block and the frame generator G.
// The CERL convolutions carry no bias.
template <typename T>
struct ModelParams {
  Dims dims;
  std::map<std::string, Tensor<T>> tensors;

  Tensor<T>& at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw TensorError("model params: missing tensor '" + name + "'");
    return it->second;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw TensorError("model params: missing tensor '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return tensors.count(name) != 0; }

  void zero_grads() {
    for (auto& [name, t] : tensors) t.zero_grad();
  }
};

// (name, shape, fan_in) for every parameter, in initialization order.
inline std::vector<std::tuple<std::string, Shape, std::size_t>> param_specs(const Dims& dims) {
  const std::size_t a = dims.a_dim, d = dims.d, c = dims.c;
  const std::size_t pix = dims.img * dims.img;
  return {
      {"ea.w1", {kAudioHidden, a}, a},
      {"ea.b1", {kAudioHidden}, 0},
      {"ea.w2", {d, kAudioHidden}, kAudioHidden},
      {"ea.b2", {d}, 0},
      {"ev.w1", {kVisualHidden, pix}, pix},
      {"ev.b1", {kVisualHidden}, 0},
      {"ev.w2", {d, kVisualHidden}, kVisualHidden},
      {"ev.b2", {d}, 0},
      {"ef.w1", {kFeatureHidden, 1, 3, 3}, 9},
      {"ef.b1", {kFeatureHidden}, 0},
      {"ef.w2", {c, kFeatureHidden, 3, 3}, kFeatureHidden * 9},
      {"ef.b2", {c}, 0},
      {"cerl.conv2", {d, c}, c},
      {"cerl.conv1", {c, d}, d},
      {"g.fuse_w", {c, c + d}, c + d},
      {"g.fuse_b", {c}, 0},
      {"g.up1_w", {kRenderHidden, c, 3, 3}, c * 9},
      {"g.up1_b", {kRenderHidden}, 0},
      {"g.up2_w", {1, kRenderHidden, 3, 3}, kRenderHidden * 9},
      {"g.up2_b", {1}, 0},
  };
}

inline bool is_metric_param(const std::string& name) {
  return name.rfind("ea.", 0) == 0 || name.rfind("ev.", 0) == 0;
}

// He-initialized weights, zero biases; deterministic per seed.
template <typename T>
ModelParams<T> init_params(Tape<T>* tape, std::uint64_t seed, const Dims& dims) {
  dims.validate();
  SeededRng rng(seed);
  ModelParams<T> p;
  p.dims = dims;
  for (const auto& [name, shape, fan_in] : param_specs(dims)) {
    if (fan_in == 0) {
      p.tensors.emplace(name, Tensor<T>::zeros(tape, shape, true));
    } else {
      const T stddev = static_cast<T>(std::sqrt(2.0 / static_cast<double>(fan_in)));
      p.tensors.emplace(name, Tensor<T>::randn(tape, shape, rng, stddev, true));
    }
  }
  return p;
}

namespace detail {

template <typename T>
Tensor<T> affine(const Tensor<T>& w, const Tensor<T>& b, const Tensor<T>& x) {
  const std::size_t n = w.shape()[0], k = w.shape()[1];
  Tensor<T> h = matmul(w, reshape(x, {k, 1}));
  return reshape(add(h, reshape(b, {n, 1})), {n});
}

}  // namespace detail

// E_a: MLP A_dim -> 32 -> D with relu.
template <typename T>
Tensor<T> audio_encode(const ModelParams<T>& p, const Tensor<T>& clip) {
  if (clip.size() != p.dims.a_dim) {
    throw TensorError("audio_encode: clip length " + std::to_string(clip.size()) +
                      " does not match A_dim " + std::to_string(p.dims.a_dim));
  }
  Tensor<T> h = relu(detail::affine(p.at("ea.w1"), p.at("ea.b1"), clip));
  return detail::affine(p.at("ea.w2"), p.at("ea.b2"), h);
}

// E_v: flattened frame img^2 -> 64 -> D with relu.
template <typename T>
Tensor<T> visual_encode(const ModelParams<T>& p, const Tensor<T>& frame) {
  const std::size_t pix = p.dims.img * p.dims.img;
  if (frame.size() != pix) {
    throw TensorError("visual_encode: frame size " + std::to_string(frame.size()) +
                      " does not match img^2 = " + std::to_string(pix));
  }
  Tensor<T> flat = reshape(frame, {pix});
  Tensor<T> h = relu(detail::affine(p.at("ev.w1"), p.at("ev.b1"), flat));
  return detail::affine(p.at("ev.w2"), p.at("ev.b2"), h);
}

// E_f: two stride-2 3x3 convs with relu; img x img -> C x img/4 x img/4.
template <typename T>
Tensor<T> extract_feature_map(const ModelParams<T>& p, const Tensor<T>& frame) {
  if (frame.shape() != Shape{1, p.dims.img, p.dims.img}) {
    throw TensorError("extract_feature_map: expected frame of shape (1," +
                      std::to_string(p.dims.img) + "," + std::to_string(p.dims.img) + "), got " +
                      shape_str(frame.shape()));
  }
  const Tensor<T>& b1 = p.at("ef.b1");
  const Tensor<T>& b2 = p.at("ef.b2");
  Tensor<T> h = relu(conv3x3(frame, p.at("ef.w1"), &b1, 2));
  return relu(conv3x3(h, p.at("ef.w2"), &b2, 2));
}

// Channel-attention fusion: normalize the audio correlation by its Frobenius
// norm, reduce f to D channels (1x1, no bias), left-multiply by the
// normalized correlation across the flattened spatial axis, expand back to C
// channels (1x1, no bias) and add f residually. A degenerate (near-zero)
// correlation returns f unchanged, bitwise.
template <typename T>
Tensor<T> cerl_fuse(const ModelParams<T>& p, const Tensor<T>& f, const Tensor<T>& c_a) {
  const std::size_t d = p.dims.d;
  if (f.shape().size() != 3 || f.shape()[0] != p.dims.c) {
    throw TensorError("cerl_fuse: feature map channels do not match C");
  }
  if (c_a.shape() != Shape{d, d}) {
    throw TensorError("cerl_fuse: correlation matrix must be D x D, got " +
                      shape_str(c_a.shape()));
  }
  double norm_sq = 0;
  for (T v : c_a.value()) norm_sq += static_cast<double>(v) * static_cast<double>(v);
  if (std::sqrt(norm_sq) < kDegenerateNorm) return f;

  const std::size_t h = f.shape()[1], w = f.shape()[2];
  Tensor<T> normalized = div(c_a, l2_norm(c_a));
  Tensor<T> reduced = conv1x1(f, p.at("cerl.conv2"));
  Tensor<T> attended = matmul(normalized, reshape(reduced, {d, h * w}));
  Tensor<T> expanded = conv1x1(reshape(attended, {d, h, w}), p.at("cerl.conv1"));
  return add(f, expanded);
}

// G: broadcast the audio embedding spatially, concatenate with the feature
// map, 1x1 fuse, then two (upsample, 3x3 conv) stages down to one channel
// with a final sigmoid. Output pixels lie in (0, 1).
template <typename T>
Tensor<T> render_frame(const ModelParams<T>& p, const Tensor<T>& g, const Tensor<T>& f_a) {
  if (g.shape().size() != 3 || g.shape()[0] != p.dims.c) {
    throw TensorError("render_frame: feature map channels do not match C");
  }
  if (f_a.size() != p.dims.d) {
    throw TensorError("render_frame: audio embedding dimension does not match D");
  }
  const std::size_t h = g.shape()[1], w = g.shape()[2];
  Tensor<T> audio_map = broadcast_spatial(f_a, h, w);
  Tensor<T> x = concat_channels(g, audio_map);
  const Tensor<T>& fb = p.at("g.fuse_b");
  const Tensor<T>& b1 = p.at("g.up1_b");
  const Tensor<T>& b2 = p.at("g.up2_b");
  x = relu(conv1x1(x, p.at("g.fuse_w"), &fb));
  x = relu(conv3x3(upsample2x(x), p.at("g.up1_w"), &b1));
  x = conv3x3(upsample2x(x), p.at("g.up2_w"), &b2);
  return sigmoid(x);
}

}  // namespace tavce

#endif  // TAVCE_ENCODERS_HPP
