// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/model.hpp"

#include "agb/error.hpp"

namespace agb::models {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::simmim: return "simmim";
    case ModelKind::gfm: return "gfm";
    case ModelKind::unet: return "unet";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "simmim") return ModelKind::simmim;
  if (text == "gfm") return ModelKind::gfm;
  if (text == "unet") return ModelKind::unet;
  throw_invalid("unknown model kind '" + text + "'");
}

nc::Tensor ModelBundle::predict(const nc::Tensor& image) const {
  if (gfm) return gfm->forward(image);
  if (unet) return unet->forward(image);
  throw_invalid("a " + std::string(to_string(kind)) + " model does not produce regression maps");
}

ModelBundle make_model(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed, nc::DType dtype,
                       bool shape_only) {
  cfg.validate();
  ModelBundle m;
  m.kind = kind;
  m.config = cfg;
  m.store = std::make_unique<ParamStore>(dtype, shape_only);
  nc::Prng rng = nc::Prng(seed).fork(0x6d6f64656c00ull + static_cast<std::uint64_t>(kind));
  switch (kind) {
    case ModelKind::simmim:
      m.simmim = std::make_unique<SimMIM>(cfg, *m.store, rng);
      break;
    case ModelKind::gfm:
      m.gfm = std::make_unique<GfmRegressor>(cfg, *m.store, rng);
      break;
    case ModelKind::unet:
      m.unet = std::make_unique<UNet>(cfg.unet, cfg.output_scale, *m.store, rng);
      break;
  }
  return m;
}

}  // namespace agb::models
