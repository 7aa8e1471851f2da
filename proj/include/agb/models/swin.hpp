// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <memory>
#include <vector>

#include "agb/models/config.hpp"
#include "agb/models/params.hpp"

namespace agb::models {

/// Hierarchical shifted-window transformer with four stages at strides
/// 4, 8, 16 and 32. Parameters are registered as encoder components.
class SwinEncoder {
 public:
  SwinEncoder(const SwinConfig& cfg, ParamStore& store, nc::Prng& rng);
  ~SwinEncoder();
  SwinEncoder(SwinEncoder&&) noexcept;

  /// image [B, C, H, W] with H, W divisible by 32. When `token_mask`
  /// ([B, H/4, W/4, 1], values 0/1) is given, masked patch embeddings are
  /// replaced by `mask_token` ([embed_dim]). Returns one NCHW map per stage.
  std::vector<nc::Tensor> forward(const nc::Tensor& image, const nc::Tensor& token_mask = {},
                                  const nc::Tensor& mask_token = {}) const;

  /// One transformer block on channels-last tokens [B, h, w, C].
  nc::Tensor block_forward(int stage, int block, const nc::Tensor& x) const;

  /// Disables the shifted-window offset in every block.
  void set_shift_enabled(bool on) { shift_enabled_ = on; }

  const SwinConfig& config() const { return cfg_; }

 private:
  SwinConfig cfg_;
  bool shift_enabled_ = true;
  struct Block;
  struct Stage;
  struct Parts;
  std::unique_ptr<Parts> parts_;
};

}  // namespace agb::models
