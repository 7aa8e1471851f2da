// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/numcore/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "agb/numcore/ops.hpp"

namespace agb::nc {
namespace {
thread_local bool t_grad_enabled = true;

detail::Buffer make_buffer(DType dtype, std::size_t n) {
  if (dtype == DType::f32) return std::vector<float>(n, 0.0f);
  return std::vector<double>(n, 0.0);
}
}  // namespace

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

const char* to_string(DType dtype) { return dtype == DType::f32 ? "f32" : "f64"; }

Tensor TensorAccess::make(Shape shape, DType dtype) {
  for (auto d : shape)
    if (d <= 0) throw_invalid("tensor dims must be positive, got " + to_string(shape));
  auto impl = std::make_shared<detail::Impl>();
  impl->data = std::make_shared<detail::Buffer>(
      make_buffer(dtype, static_cast<std::size_t>(nc::numel(shape))));
  impl->shape = std::move(shape);
  impl->dtype = dtype;
  return Tensor(std::move(impl));
}

Tensor TensorAccess::view(const Tensor& src, Shape shape) {
  auto impl = std::make_shared<detail::Impl>();
  impl->shape = std::move(shape);
  impl->dtype = src.impl_->dtype;
  impl->data = src.impl_->data;
  return Tensor(std::move(impl));
}

bool TensorAccess::needs_graph(std::initializer_list<const Tensor*> inputs) {
  if (!t_grad_enabled) return false;
  for (const Tensor* t : inputs)
    if (t && t->defined() && t->requires_grad()) return true;
  return false;
}

void TensorAccess::attach(Tensor& out, const char* op, std::vector<Tensor> inputs,
                          detail::BackwardFn fn) {
  auto node = std::make_shared<detail::Node>();
  node->op = op;
  node->inputs = std::move(inputs);
  node->backward = std::move(fn);
  out.impl_->node = std::move(node);
  out.impl_->requires_grad = true;
}

void TensorAccess::accumulate_grad(const Tensor& leaf, const Tensor& grad) {
  auto& impl = *leaf.impl_;
  if (!impl.grad) {
    impl.grad = std::make_shared<detail::Buffer>(*grad.impl_->data);
    return;
  }
  std::visit(
      [&](auto& acc) {
        using T = typename std::decay_t<decltype(acc)>::value_type;
        auto g = grad.data<T>();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
      },
      *impl.grad);
}

Tensor Tensor::zeros(Shape shape, DType dtype) { return TensorAccess::make(std::move(shape), dtype); }

Tensor Tensor::full(Shape shape, double value, DType dtype) {
  Tensor t = TensorAccess::make(std::move(shape), dtype);
  dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    auto out = TensorAccess::writable<T>(t);
    std::fill(out.begin(), out.end(), static_cast<T>(value));
  });
  return t;
}

Tensor Tensor::from(Shape shape, std::span<const double> values, DType dtype) {
  if (nc::numel(shape) != static_cast<std::int64_t>(values.size()))
    throw_invalid("value count " + std::to_string(values.size()) + " does not match shape " +
                  to_string(shape));
  Tensor t = TensorAccess::make(std::move(shape), dtype);
  dispatch(dtype, [&](auto tag) {
    using T = decltype(tag);
    auto out = TensorAccess::writable<T>(t);
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<T>(values[i]);
  });
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<float> values) {
  if (nc::numel(shape) != static_cast<std::int64_t>(values.size()))
    throw_invalid("value count does not match shape " + to_string(shape));
  Tensor t = TensorAccess::make(std::move(shape), DType::f32);
  *t.impl_->data = std::move(values);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  if (nc::numel(shape) != static_cast<std::int64_t>(values.size()))
    throw_invalid("value count does not match shape " + to_string(shape));
  Tensor t = TensorAccess::make(std::move(shape), DType::f64);
  *t.impl_->data = std::move(values);
  return t;
}

Tensor Tensor::scalar(double value, DType dtype) {
  std::vector<double> v{value};
  return from(Shape{}, v, dtype);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw_invalid("shape() on undefined tensor");
  return impl_->shape;
}

std::int64_t Tensor::dim(int axis) const {
  const auto& s = shape();
  const int n = static_cast<int>(s.size());
  if (axis < 0) axis += n;
  if (axis < 0 || axis >= n) throw_invalid("axis out of range for shape " + to_string(s));
  return s[static_cast<std::size_t>(axis)];
}

std::int64_t Tensor::numel() const { return nc::numel(shape()); }

DType Tensor::dtype() const {
  if (!impl_) throw_invalid("dtype() on undefined tensor");
  return impl_->dtype;
}

std::vector<double> Tensor::to_vector() const {
  return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); },
                    *impl_->data);
}

double Tensor::value(std::int64_t flat_index) const {
  if (flat_index < 0 || flat_index >= numel()) throw_invalid("flat index out of range");
  return std::visit([&](const auto& v) { return static_cast<double>(v[flat_index]); },
                    *impl_->data);
}

double Tensor::item() const {
  if (numel() != 1) throw_invalid("item() requires a single-element tensor, got " + to_string(shape()));
  return value(0);
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (!impl_) throw_invalid("set_requires_grad on undefined tensor");
  if (impl_->node) throw_invalid("set_requires_grad is only valid on leaf tensors");
  impl_->requires_grad = flag;
  return *this;
}

bool Tensor::is_leaf() const { return impl_ && !impl_->node; }

Tensor Tensor::grad() const {
  if (!impl_ || !impl_->grad) return {};
  auto impl = std::make_shared<detail::Impl>();
  impl->shape = impl_->shape;
  impl->dtype = impl_->dtype;
  impl->data = impl_->grad;
  return Tensor(std::move(impl));
}

void Tensor::zero_grad() const {
  if (impl_) impl_->grad.reset();
}

Tensor Tensor::detach() const { return TensorAccess::view(*this, impl_->shape); }

Tensor Tensor::clone() const {
  Tensor t = detach();
  t.impl_->data = std::make_shared<detail::Buffer>(*impl_->data);
  return t;
}

Tensor Tensor::to(DType dtype) const {
  if (dtype == this->dtype()) return clone();
  Tensor out = TensorAccess::make(impl_->shape, dtype);
  std::visit(
      [&](const auto& src) {
        dispatch(dtype, [&](auto tag) {
          using T = decltype(tag);
          auto dst = TensorAccess::writable<T>(out);
          for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<T>(src[i]);
        });
      },
      *impl_->data);
  return out;
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() { return t_grad_enabled; }

std::int64_t backward(const Tensor& loss) {
  if (!loss.defined()) throw_invalid("backward() on undefined tensor");
  if (loss.numel() != 1)
    throw_invalid("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  if (!loss.requires_grad()) throw_invalid("backward() on a tensor that does not require grad");

  // Post-order DFS yields a topological order (inputs before outputs).
  std::vector<detail::Impl*> order;
  std::unordered_map<detail::Impl*, Tensor> handles;
  std::unordered_set<detail::Impl*> visited;
  struct Frame {
    detail::Impl* impl;
    std::size_t next;
  };
  std::vector<Frame> stack;
  auto push = [&](const Tensor& t) {
    auto* p = t.impl_.get();
    if (!p->requires_grad || visited.count(p)) return;
    visited.insert(p);
    handles.emplace(p, t);
    stack.push_back({p, 0});
  };
  push(loss);
  while (!stack.empty()) {
    auto& top = stack.back();
    const auto& node = top.impl->node;
    if (node && top.next < node->inputs.size()) {
      const Tensor& in = node->inputs[top.next++];
      if (in.defined()) push(in);
      continue;
    }
    order.push_back(top.impl);
    stack.pop_back();
  }

  NoGradGuard no_grad;
  std::unordered_map<detail::Impl*, Tensor> grads;
  grads.emplace(loss.impl_.get(), Tensor::full(loss.shape(), 1.0, loss.dtype()));
  std::int64_t visited_nodes = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Impl* impl = *it;
    auto found = grads.find(impl);
    if (found == grads.end()) continue;
    Tensor g = std::move(found->second);
    grads.erase(found);
    if (!impl->node) {
      TensorAccess::accumulate_grad(handles.at(impl), g);
      continue;
    }
    ++visited_nodes;
    auto in_grads = impl->node->backward(g);
    const auto& inputs = impl->node->inputs;
    for (std::size_t i = 0; i < inputs.size() && i < in_grads.size(); ++i) {
      const Tensor& in = inputs[i];
      if (!in.defined() || !in.requires_grad() || !in_grads[i].defined()) continue;
      auto* key = in.impl_.get();
      auto slot = grads.find(key);
      if (slot == grads.end()) {
        grads.emplace(key, std::move(in_grads[i]));
      } else {
        slot->second = add(slot->second, in_grads[i]);
      }
    }
  }
  return visited_nodes;
}

}  // namespace agb::nc
