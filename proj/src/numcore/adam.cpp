// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/numcore/adam.hpp"

#include <cmath>

namespace agb::nc {

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
               std::span<const std::string> names, AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != names.size())
    throw_invalid("adam_step: params, grads and names differ in length");
  if (!(lr > 0.0)) throw_invalid("adam_step: learning rate must be positive");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Tensor::zeros(p.shape(), p.dtype()));
      state.v.push_back(Tensor::zeros(p.shape(), p.dtype()));
    }
  }
  if (state.m.size() != params.size()) throw_invalid("adam_step: optimizer state does not match params");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].shape() != params[i].shape())
      throw_invalid("adam_step: moment shape mismatch for '" + names[i] + "'");
    if (grads[i].defined() && grads[i].shape() != params[i].shape())
      throw_invalid("adam_step: gradient shape mismatch for '" + names[i] + "'");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].defined()) continue;
    for (double g : grads[i].to_vector())
      if (!std::isfinite(g))
        throw Error(ErrorKind::numeric, "E_NAN", "non-finite gradient in parameter '" + names[i] + "'");
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    dispatch(params[i].dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto p = params[i].mutable_leaf_data<T>();
      auto m = state.m[i].mutable_leaf_data<T>();
      auto v = state.v[i].mutable_leaf_data<T>();
      std::span<const T> g;
      if (grads[i].defined()) g = grads[i].data<T>();
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = g.empty() ? 0.0 : static_cast<double>(g[j]);
        const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
        const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        p[j] = static_cast<T>(p[j] - lr * mhat / (std::sqrt(vhat) + state.eps));
      }
    });
  }
}

}  // namespace agb::nc
