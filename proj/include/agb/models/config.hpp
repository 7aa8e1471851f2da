// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <array>
#include <string>

#include "json.hpp"

namespace agb::models {

struct SwinConfig {
  int in_channels = 6;
  int patch_size = 4;
  int embed_dim = 32;
  std::array<int, 4> depths{2, 2, 2, 2};
  std::array<int, 4> heads{2, 4, 8, 16};
  int window_size = 4;
  int mlp_ratio = 4;

  int stage_dim(int i) const { return embed_dim << i; }
  void validate() const;
  bool operator==(const SwinConfig&) const = default;
};

struct SimMIMConfig {
  double mask_ratio = 0.6;
  int mask_patch_size = 8;
  /// Reconstruction loss over every pixel instead of masked pixels only.
  bool loss_on_all_pixels = false;
  bool operator==(const SimMIMConfig&) const = default;
};

struct HeadConfig {
  int fusion_width = 16;
  std::array<int, 4> pool_scales{1, 2, 3, 6};
  bool operator==(const HeadConfig&) const = default;
};

struct UNetConfig {
  int in_channels = 6;
  int depth = 4;
  int base_width = 8;
  bool operator==(const UNetConfig&) const = default;
};

/// Architecture settings for every model family plus the regression output scale.
struct ModelConfig {
  std::string preset = "toy";
  SwinConfig swin;
  SimMIMConfig simmim;
  HeadConfig head;
  UNetConfig unet;
  /// Regression outputs are ReLU(z)·output_scale, in Mg/ha.
  double output_scale = 100.0;

  static ModelConfig toy();
  static ModelConfig paper();
  static ModelConfig preset_named(const std::string& name);

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
/// Starts from the named preset (default "toy") and applies overrides.
/// Unknown keys raise a config error.
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace agb::models
