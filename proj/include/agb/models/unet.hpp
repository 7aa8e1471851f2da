// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <memory>

#include "agb/models/config.hpp"
#include "agb/models/params.hpp"

namespace agb::models {

/// Contracting/expanding baseline with skip connections. Each level is two
/// 3×3 conv + ReLU; downsampling is 2×2 max pooling and upsampling a 1×1
/// conv followed by pixel shuffle(2). All parameters are decoder-tagged.
class UNet {
 public:
  UNet(const UNetConfig& cfg, double output_scale, ParamStore& store, nc::Prng& rng);
  ~UNet();
  UNet(UNet&&) noexcept;

  /// image [B, C, H, W] with H, W divisible by 2^depth → [B, 1, H, W], ≥ 0.
  nc::Tensor forward(const nc::Tensor& image) const;

 private:
  struct Parts;
  UNetConfig cfg_;
  double output_scale_;
  std::unique_ptr<Parts> parts_;
};

}  // namespace agb::models
