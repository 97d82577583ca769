#ifndef TAVCE_CORRELATION_HPP
#define TAVCE_CORRELATION_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "tavce/ops.hpp"
#include "tavce/rng.hpp"
#include "tavce/tensor.hpp"

namespace tavce {

// Frobenius norms below this are treated as degenerate in cosine computations.
inline constexpr double kDegenerateNorm = 1e-12;

// Temporal relationship of two D-dimensional embeddings: the centered outer
// product (f_i - mean(f_i)) (f_j - mean(f_j))^T, a D x D matrix. Channels play
// the role of samples, so constant shifts of either input vanish.
template <typename T>
Tensor<T> covariance(const Tensor<T>& f_i, const Tensor<T>& f_j) {
  if (f_i.shape().size() != 1 || f_j.shape().size() != 1) {
    throw TensorError("covariance: inputs must be 1-D embeddings");
  }
  const std::size_t d = f_i.shape()[0];
  if (f_j.shape()[0] != d) {
    throw TensorError("covariance: dimension mismatch " + shape_str(f_i.shape()) + " vs " +
                      shape_str(f_j.shape()));
  }
  if (d < 2) throw TensorError("covariance: embedding dimension must be >= 2");
  Tensor<T> ci = sub(f_i, mean(f_i));
  Tensor<T> cj = sub(f_j, mean(f_j));
  return matmul(reshape(ci, {d, 1}), reshape(cj, {1, d}));
}

// Cosine similarity of two equal-shape matrices flattened to vectors
// (Frobenius inner product over the product of Frobenius norms). A
// near-zero norm on either side yields 0 and raises the degenerate flag;
// the constant result carries no gradient.
template <typename T>
Tensor<T> flat_cosine(const Tensor<T>& c1, const Tensor<T>& c2, bool* degenerate = nullptr) {
  if (c1.shape() != c2.shape()) {
    throw TensorError("flat_cosine: shape mismatch " + shape_str(c1.shape()) + " vs " +
                      shape_str(c2.shape()));
  }
  double n1 = 0, n2 = 0;
  for (T v : c1.value()) n1 += static_cast<double>(v) * static_cast<double>(v);
  for (T v : c2.value()) n2 += static_cast<double>(v) * static_cast<double>(v);
  if (std::sqrt(n1) < kDegenerateNorm || std::sqrt(n2) < kDegenerateNorm) {
    if (degenerate) *degenerate = true;
    return Tensor<T>::scalar(T(0));
  }
  if (degenerate) *degenerate = false;
  Tensor<T> dot = sum(mul(c1, c2));
  return div(dot, mul(l2_norm(c1), l2_norm(c2)));
}

// Triplet alignment term: (1 - cos(anchor, positive)) + (1 + cos(anchor,
// negative)). Lies in [0, 4]; 0 when the positive is perfectly aligned and
// the negative perfectly anti-aligned.
template <typename T>
Tensor<T> tavc_triplet_loss(const Tensor<T>& c_a, const Tensor<T>& c_v_pos,
                            const Tensor<T>& c_v_neg) {
  Tensor<T> pos_term = add_scalar(scale(flat_cosine(c_a, c_v_pos), T(-1)), T(1));
  Tensor<T> neg_term = add_scalar(flat_cosine(c_a, c_v_neg), T(1));
  return add(pos_term, neg_term);
}

template <typename T>
struct CorrelationTriplet {
  Tensor<T> anchor;    // audio correlation c^a_{i-1,i}
  Tensor<T> positive;  // visual correlation c^v_{i-1,i}
  Tensor<T> negative;  // visual correlation c^v_{i-1,j}, j outside the tau window
};

// Sum of triplet losses over the batch, accumulated in ascending order.
template <typename T>
Tensor<T> tavc_objective(const std::vector<CorrelationTriplet<T>>& batch) {
  if (batch.empty()) throw TensorError("tavc_objective: empty batch");
  Tensor<T> total = tavc_triplet_loss(batch[0].anchor, batch[0].positive, batch[0].negative);
  for (std::size_t i = 1; i < batch.size(); ++i) {
    total = add(total, tavc_triplet_loss(batch[i].anchor, batch[i].positive, batch[i].negative));
  }
  return total;
}

struct TripletIndex {
  std::size_t anchor;    // i in [1, T-1]; positive pair is (i-1, i)
  std::size_t negative;  // j outside [i - tau, i + tau]
  std::size_t tau;
};

// One triplet per anchor i in [1, T-1]; the negative index is uniform over
// {0..T-1} minus the window [i - tau, i + tau].
inline std::vector<TripletIndex> make_triplet_indices(std::size_t t, std::size_t tau,
                                                      SeededRng& rng) {
  if (t < 2 * tau + 3) {
    throw TensorError("make_triplet_indices: T=" + std::to_string(t) +
                      " too small for tau=" + std::to_string(tau) + " (need T >= 2*tau + 3)");
  }
  std::vector<TripletIndex> out;
  out.reserve(t - 1);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i < t; ++i) {
    candidates.clear();
    const std::size_t lo = i >= tau ? i - tau : 0;
    const std::size_t hi = i + tau;
    for (std::size_t j = 0; j < t; ++j) {
      if (j < lo || j > hi) candidates.push_back(j);
    }
    if (candidates.empty()) {
      throw TensorError("make_triplet_indices: no legal negative for anchor " + std::to_string(i));
    }
    out.push_back({i, candidates[rng.next_below(candidates.size())], tau});
  }
  return out;
}

// Correlation-aware regularization: mean over pairs of (1 - cos(c_a, c_v)),
// where c_v relates the previous real frame's embedding to the generated
// frame's embedding. Range [0, 2]; 0 iff every pair has cosine 1.
template <typename T>
Tensor<T> car_loss(const std::vector<std::pair<Tensor<T>, Tensor<T>>>& pairs,
                   std::size_t* degenerate_count = nullptr) {
  if (pairs.empty()) throw TensorError("car_loss: empty pair list");
  Tensor<T> total;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    bool degen = false;
    Tensor<T> term = add_scalar(scale(flat_cosine(pairs[i].first, pairs[i].second, &degen), T(-1)),
                                T(1));
    if (degen && degenerate_count) ++*degenerate_count;
    total = i == 0 ? term : add(total, term);
  }
  return scale(total, T(1) / static_cast<T>(pairs.size()));
}

}  // namespace tavce

#endif  // TAVCE_CORRELATION_HPP
