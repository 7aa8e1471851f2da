// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "agb/models/config.hpp"
#include "agb/models/head.hpp"
#include "agb/models/params.hpp"
#include "agb/models/simmim.hpp"
#include "agb/models/unet.hpp"

namespace agb::models {

enum class ModelKind : std::uint8_t { simmim, gfm, unet };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// A parameter store together with the one architecture built on it.
struct ModelBundle {
  ModelKind kind = ModelKind::gfm;
  ModelConfig config;
  std::unique_ptr<ParamStore> store;
  std::unique_ptr<SimMIM> simmim;
  std::unique_ptr<GfmRegressor> gfm;
  std::unique_ptr<UNet> unet;

  /// Regression output [B, 1, H, W] for the gfm and unet kinds.
  nc::Tensor predict(const nc::Tensor& image) const;
};

/// Builds a freshly initialized model. Initialization draws from a stream
/// derived from `seed` and the kind, so equal inputs give equal weights.
ModelBundle make_model(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed,
                       nc::DType dtype = nc::DType::f32, bool shape_only = false);

inline std::int64_t count_params(const ParamStore& store, bool trainable_only) {
  return store.count(trainable_only);
}

inline void freeze_encoder(ParamStore& store) { store.freeze(Component::encoder); }

}  // namespace agb::models
