#ifndef TAVCE_TENSOR_HPP
#define TAVCE_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tavce/rng.hpp"

namespace tavce {

class TensorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // same length as value once requires_grad is set
  bool requires_grad = false;
};

template <typename T>
class Tape;

// Dense row-major tensor. Copies share storage; the tape records ops that
// touch tensors with requires_grad set.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Tape<T>* tape, Shape shape, std::vector<T> value, bool requires_grad) {
    if (numel(shape) != value.size()) {
      throw TensorError("tensor: shape " + shape_str(shape) + " does not match buffer size " +
                        std::to_string(value.size()));
    }
    Tensor t;
    t.s_ = std::make_shared<TensorStorage<T>>();
    t.s_->shape = std::move(shape);
    t.s_->value = std::move(value);
    t.s_->requires_grad = requires_grad;
    if (requires_grad) t.s_->grad.assign(t.s_->value.size(), T(0));
    t.tape_ = tape;
    return t;
  }

  static Tensor constant(Shape shape, std::vector<T> value) {
    return leaf(nullptr, std::move(shape), std::move(value), false);
  }

  static Tensor scalar(T v) { return constant({1}, {v}); }

  static Tensor zeros(Tape<T>* tape, Shape shape, bool requires_grad = false) {
    std::vector<T> v(numel(shape), T(0));
    return leaf(tape, std::move(shape), std::move(v), requires_grad);
  }

  static Tensor randn(Tape<T>* tape, Shape shape, SeededRng& rng, T stddev,
                      bool requires_grad = false) {
    std::vector<T> v(numel(shape));
    for (auto& x : v) x = static_cast<T>(rng.next_gaussian()) * stddev;
    return leaf(tape, std::move(shape), std::move(v), requires_grad);
  }

  bool defined() const { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  std::size_t size() const { return s_->value.size(); }
  std::vector<T>& value() { return s_->value; }
  const std::vector<T>& value() const { return s_->value; }
  std::vector<T>& grad() { return s_->grad; }
  const std::vector<T>& grad() const { return s_->grad; }
  bool requires_grad() const { return s_->requires_grad; }
  Tape<T>* tape() const { return tape_; }
  std::shared_ptr<TensorStorage<T>> storage() const { return s_; }

  T item() const {
    if (size() != 1) throw TensorError("item: tensor is not scalar, shape " + shape_str(shape()));
    return s_->value[0];
  }

  void zero_grad() {
    if (s_->requires_grad) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
  }

 private:
  std::shared_ptr<TensorStorage<T>> s_;
  Tape<T>* tape_ = nullptr;
};

// Ordered record of executed differentiable ops. Ops are appended in
// execution order, so the record is topologically sorted by construction;
// one backward pass visits each node exactly once, in reverse.
template <typename T>
class Tape {
 public:
  void push(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Seeds the scalar loss with gradient 1, propagates through all recorded
  // nodes in reverse, then resets the tape.
  void backward(Tensor<T>& loss) {
    if (loss.size() != 1) {
      throw TensorError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    }
    if (!loss.requires_grad()) {
      throw TensorError("backward: loss is detached from the graph (requires_grad is false)");
    }
    loss.grad()[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    nodes_.clear();
  }

  void clear() { nodes_.clear(); }

 private:
  std::vector<std::function<void()>> nodes_;
  bool recording_ = true;
};

template <typename T>
inline void check_finite(const char* op, const std::vector<T>& data) {
  for (const T& x : data) {
    if (!std::isfinite(static_cast<double>(x))) {
      throw TensorError(std::string("non-finite value produced by op '") + op + "'");
    }
  }
}

}  // namespace tavce

#endif  // TAVCE_TENSOR_HPP
