// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <string>

#include "agb/models/params.hpp"
#include "agb/numcore/ops.hpp"

namespace agb::models::detail {

/// Registers parameters under a name prefix for one component.
struct Builder {
  ParamStore& store;
  nc::Prng& rng;
  Component component;
  std::string prefix;
  Init weight_init = Init::trunc_normal;

  Builder sub(const std::string& name) const { return {store, rng, component, prefix + name + ".", weight_init}; }
  nc::Tensor weight(const std::string& name, nc::Shape shape) const {
    return store.add(prefix + name, std::move(shape), component, weight_init, rng);
  }
  nc::Tensor zeros(const std::string& name, nc::Shape shape) const {
    return store.add(prefix + name, std::move(shape), component, Init::zeros, rng);
  }
  nc::Tensor ones(const std::string& name, nc::Shape shape) const {
    return store.add(prefix + name, std::move(shape), component, Init::ones, rng);
  }
};

struct Linear {
  nc::Tensor w, b;
  Linear() = default;
  Linear(const Builder& b_, std::int64_t in, std::int64_t out, bool bias = true)
      : w(b_.weight("weight", {out, in})), b(bias ? b_.zeros("bias", {out}) : nc::Tensor()) {}
  nc::Tensor operator()(const nc::Tensor& x) const { return nc::linear(x, w, b); }
};

struct Conv {
  nc::Tensor w, b;
  int stride = 1, pad = 0;
  Conv() = default;
  Conv(const Builder& b_, std::int64_t in, std::int64_t out, int k, int stride_ = 1, int pad_ = 0)
      : w(b_.weight("weight", {out, in, k, k})), b(b_.zeros("bias", {out})), stride(stride_), pad(pad_) {}
  nc::Tensor operator()(const nc::Tensor& x) const { return nc::conv2d(x, w, b, stride, pad); }
};

struct Norm {
  nc::Tensor w, b;
  Norm() = default;
  Norm(const Builder& b_, std::int64_t dim) : w(b_.ones("weight", {dim})), b(b_.zeros("bias", {dim})) {}
  nc::Tensor operator()(const nc::Tensor& x) const { return nc::layer_norm(x, w, b); }
};

}  // namespace agb::models::detail
