// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <array>
#include <memory>
#include <vector>

#include "agb/models/config.hpp"
#include "agb/models/params.hpp"
#include "agb/models/swin.hpp"

namespace agb::models {

/// UPerNet-style regression decoder: pyramid pooling on the deepest map,
/// top-down lateral fusion to a stride-4 map, then two conv + pixel-shuffle(2)
/// blocks and a 1-channel ReLU output at input resolution.
class RegressionHead {
 public:
  RegressionHead(const HeadConfig& cfg, const std::array<int, 4>& in_dims, double output_scale, ParamStore& store,
                 nc::Prng& rng);
  ~RegressionHead();
  RegressionHead(RegressionHead&&) noexcept;

  nc::Tensor forward(const std::vector<nc::Tensor>& features) const;

 private:
  struct Parts;
  HeadConfig cfg_;
  double output_scale_;
  std::unique_ptr<Parts> parts_;
};

/// Encoder plus regression head: the fine-tuned foundation model.
class GfmRegressor {
 public:
  GfmRegressor(const ModelConfig& cfg, ParamStore& store, nc::Prng& rng);

  nc::Tensor forward(const nc::Tensor& image) const { return head_.forward(encoder_.forward(image)); }

  SwinEncoder& encoder() { return encoder_; }
  const SwinEncoder& encoder() const { return encoder_; }
  const RegressionHead& head() const { return head_; }

 private:
  SwinEncoder encoder_;
  RegressionHead head_;
};

std::array<int, 4> stage_dims(const SwinConfig& cfg);

}  // namespace agb::models
