// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "agb/error.hpp"

namespace agb::nc {

enum class DType : std::uint8_t { f32, f64 };

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string to_string(const Shape& shape);
const char* to_string(DType dtype);

class Tensor;

namespace detail {

using Buffer = std::variant<std::vector<float>, std::vector<double>>;

/// Backward rule: maps the gradient of a node's output onto one gradient per
/// input (an undefined Tensor where the input needs none).
using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

struct Node {
  const char* op = "";
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

struct Impl {
  Shape shape;
  DType dtype = DType::f32;
  std::shared_ptr<Buffer> data;
  bool requires_grad = false;
  std::shared_ptr<Buffer> grad;
  std::shared_ptr<Node> node;
};

}  // namespace detail

/// Dense row-major array with optional gradient tracking.
///
/// A Tensor is a shared handle: copies alias the same immutable buffer. Ops
/// never write to their inputs; only the optimizer rewrites leaf parameters,
/// and it copies first when the buffer is shared.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, DType dtype = DType::f32);
  static Tensor full(Shape shape, double value, DType dtype = DType::f32);
  static Tensor from(Shape shape, std::span<const double> values, DType dtype = DType::f32);
  static Tensor from(Shape shape, std::vector<float> values);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value, DType dtype = DType::f32);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t dim(int axis) const;
  int ndim() const { return static_cast<int>(shape().size()); }
  std::int64_t numel() const;
  DType dtype() const;

  template <typename T>
  std::span<const T> data() const;

  std::vector<double> to_vector() const;
  double value(std::int64_t flat_index) const;
  double item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);
  bool is_leaf() const;

  /// Accumulated gradient of a leaf; undefined before the first backward.
  Tensor grad() const;
  void zero_grad() const;

  /// Same data, no graph history.
  Tensor detach() const;
  /// Deep copy of the data, no graph history.
  Tensor clone() const;
  Tensor to(DType dtype) const;

  /// Writable view of a leaf's data for in-place parameter updates. Forces
  /// a private copy when the buffer is aliased elsewhere.
  template <typename T>
  std::span<T> mutable_leaf_data();

  const void* id() const noexcept { return impl_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<detail::Impl> impl_;

  friend struct TensorAccess;
  friend std::int64_t backward(const Tensor& loss);
};

/// Reverse pass from a scalar loss. Gradients accumulate on every
/// requires_grad leaf. Returns the number of graph nodes visited.
std::int64_t backward(const Tensor& loss);

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Internal helpers shared by the op implementations.
struct TensorAccess {
  static Tensor make(Shape shape, DType dtype);
  template <typename T>
  static std::span<T> writable(Tensor& t);
  static bool needs_graph(std::initializer_list<const Tensor*> inputs);
  static void attach(Tensor& out, const char* op, std::vector<Tensor> inputs, detail::BackwardFn fn);
  static Tensor view(const Tensor& src, Shape shape);
  static void accumulate_grad(const Tensor& leaf, const Tensor& grad);
  static const std::shared_ptr<detail::Node>& node(const Tensor& t) { return t.impl_->node; }
};

template <typename F>
decltype(auto) dispatch(DType dtype, F&& f) {
  if (dtype == DType::f32) return f(float{});
  return f(double{});
}

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) {
    return DType::f32;
  } else {
    static_assert(std::is_same_v<T, double>);
    return DType::f64;
  }
}

template <typename T>
std::span<const T> Tensor::data() const {
  if (!impl_) throw_invalid("data() on undefined tensor");
  auto* v = std::get_if<std::vector<T>>(impl_->data.get());
  if (!v) throw_invalid(std::string("tensor dtype is ") + to_string(impl_->dtype));
  return {v->data(), v->size()};
}

template <typename T>
std::span<T> Tensor::mutable_leaf_data() {
  if (!impl_ || impl_->node) throw_invalid("mutable_leaf_data() requires a leaf tensor");
  if (impl_->data.use_count() > 1) impl_->data = std::make_shared<detail::Buffer>(*impl_->data);
  auto* v = std::get_if<std::vector<T>>(impl_->data.get());
  if (!v) throw_invalid(std::string("tensor dtype is ") + to_string(impl_->dtype));
  return {v->data(), v->size()};
}

template <typename T>
std::span<T> TensorAccess::writable(Tensor& t) {
  auto& v = std::get<std::vector<T>>(*t.impl_->data);
  return {v.data(), v.size()};
}

}  // namespace agb::nc
