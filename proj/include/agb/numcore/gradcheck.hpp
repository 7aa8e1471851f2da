// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "agb/numcore/prng.hpp"
#include "agb/numcore/tensor.hpp"

namespace agb::nc {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Entries probed per leaf; leaves at or below this size are probed fully.
  int max_entries_per_leaf = 12;
  /// Denominator floor for the relative error, guarding exact-zero gradients.
  double floor = 1e-5;
  /// Replays the relu/abs/max-pool branch choices of the base point during
  /// every finite-difference evaluation (see GateTape).
  bool freeze_gates = false;
};

struct GradCheckReport {
  std::string name;
  double max_rel_error = 0.0;
  std::int64_t entries = 0;
  /// Probed entries whose analytic gradient is nonzero; 0 means the check
  /// exercised nothing.
  std::int64_t nonzero_entries = 0;
  bool passed = false;
  /// Location and values of the worst entry.
  std::int64_t worst_leaf = -1;
  std::int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares reverse-mode gradients of loss_fn() against central differences
/// for the given f64 leaves. loss_fn must rebuild the graph on each call.
GradCheckReport check_gradients(const std::string& name, const std::function<Tensor()>& loss_fn,
                                std::vector<Tensor> leaves, Prng& rng, const GradCheckOptions& opts = {});

/// Random projection ⟨out, R⟩ used to turn a tensor output into a scalar.
Tensor random_projection(const Tensor& out, Prng& rng);

/// Names of the differentiable primitives covered by the built-in suite.
std::vector<std::string> primitive_check_names();

/// Runs one primitive's check on random f64 inputs drawn from `seed`.
GradCheckReport run_primitive_check(const std::string& name, std::uint64_t seed,
                                    const GradCheckOptions& opts = {});

}  // namespace agb::nc
