// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agb/numcore/gradcheck.hpp"

namespace agb::models {

/// Toy-size model paths covered by the finite-difference suite:
/// swin_block, simmim, head, unet.
std::vector<std::string> model_check_names();

/// Builds the named path in f64 from `seed` and compares reverse-mode
/// gradients for its inputs and parameters against central differences.
nc::GradCheckReport run_model_check(const std::string& name, std::uint64_t seed, nc::GradCheckOptions opts = {});

}  // namespace agb::models
