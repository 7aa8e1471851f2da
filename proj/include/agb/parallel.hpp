// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <functional>

namespace agb {

/// Caps worker threads used by parallel_for; 0 restores the hardware default.
void set_worker_threads(int n);
int worker_threads();

/// Runs body(i) for i in [0, n) over contiguous chunks. Bodies must write
/// disjoint outputs; there is no reduction, so results never depend on the
/// worker count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

}  // namespace agb
