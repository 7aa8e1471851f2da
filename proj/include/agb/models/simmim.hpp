// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <vector>

#include "agb/models/config.hpp"
#include "agb/models/params.hpp"
#include "agb/models/swin.hpp"

namespace agb::models {

/// Boolean grid at mask-patch granularity; 1 marks a hidden patch.
struct PatchMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  std::int64_t masked() const;
};

/// Hides exactly round-half-up(ratio·rows·cols) cells chosen uniformly.
PatchMask random_patch_mask(int rows, int cols, double ratio, nc::Prng& rng);

/// Masked image modeling: learnable mask token at patch-embedding level, a
/// 1×1 convolution from the stride-32 feature to 32²·C channels, and a pixel
/// shuffle back to full resolution.
class SimMIM {
 public:
  SimMIM(const ModelConfig& cfg, ParamStore& store, nc::Prng& rng);

  struct Output {
    nc::Tensor reconstruction;
    nc::Tensor loss;
  };

  /// Reconstructs `image` [B, C, H, W] with one mask per sample; the loss is
  /// the mean absolute error against `target` (the image itself when undefined).
  Output forward(const nc::Tensor& image, const std::vector<PatchMask>& masks,
                 const nc::Tensor& target = {}) const;

  /// Token-level mask [B, H/4, W/4, 1] in the given dtype.
  nc::Tensor token_mask(const std::vector<PatchMask>& masks, std::int64_t h_tokens, std::int64_t w_tokens,
                        nc::DType dtype) const;
  /// Pixel-level 0/1 mask over [B, C, H, W].
  std::vector<std::uint8_t> pixel_mask(const std::vector<PatchMask>& masks, std::int64_t channels,
                                       std::int64_t height, std::int64_t width) const;

  SwinEncoder& encoder() { return encoder_; }
  const SwinEncoder& encoder() const { return encoder_; }
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  SwinEncoder encoder_;
  nc::Tensor mask_token_;
  nc::Tensor dec_w_, dec_b_;
};

}  // namespace agb::models
