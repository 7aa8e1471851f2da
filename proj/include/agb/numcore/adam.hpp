// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "agb/numcore/tensor.hpp"

namespace agb::nc {

/// Per-parameter moments for bias-corrected Adam.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One Adam update, in place on each leaf in `params`. An undefined gradient
/// counts as zero. Non-finite gradients raise a numeric fault naming the
/// offending parameter; nothing is modified in that case.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
               std::span<const std::string> names, AdamState& state, double lr);

}  // namespace agb::nc
