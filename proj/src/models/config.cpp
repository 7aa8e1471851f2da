// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/config.hpp"

#include <set>

#include "agb/error.hpp"

namespace agb::models {

using nlohmann::json;

void SwinConfig::validate() const {
  if (in_channels < 1 || patch_size < 1 || embed_dim < 1 || window_size < 1 || mlp_ratio < 1)
    throw_config("swin: sizes must be positive");
  for (int i = 0; i < 4; ++i) {
    if (depths[i] < 1 || heads[i] < 1) throw_config("swin: depths and heads must be positive");
    if (stage_dim(i) % heads[i] != 0)
      throw_config("swin: stage " + std::to_string(i) + " width not divisible by its heads");
  }
}

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.preset = "paper";
  c.swin.embed_dim = 128;
  c.swin.depths = {2, 2, 18, 2};
  c.swin.heads = {4, 8, 16, 32};
  c.swin.window_size = 7;
  c.simmim.mask_patch_size = 32;
  c.head.fusion_width = 32;
  c.unet.base_width = 32;
  return c;
}

ModelConfig ModelConfig::preset_named(const std::string& name) {
  if (name == "toy") return toy();
  if (name == "paper") return paper();
  throw_config("unknown model preset '" + name + "' (expected toy or paper)");
}

void ModelConfig::validate() const {
  swin.validate();
  if (!(simmim.mask_ratio > 0.0 && simmim.mask_ratio < 1.0)) throw_config("simmim.mask_ratio must lie in (0, 1)");
  if (simmim.mask_patch_size < swin.patch_size || simmim.mask_patch_size % swin.patch_size != 0)
    throw_config("simmim.mask_patch_size must be a multiple of the patch size");
  if (head.fusion_width < 4 || head.fusion_width % 4 != 0) throw_config("head.fusion_width must be a multiple of 4");
  for (int s : head.pool_scales)
    if (s < 1) throw_config("head.pool_scales must be positive");
  if (unet.depth < 1 || unet.base_width < 1 || unet.in_channels < 1) throw_config("unet sizes must be positive");
  if (unet.in_channels != swin.in_channels) throw_config("unet and swin must agree on input channels");
  if (!(output_scale > 0.0)) throw_config("output_scale must be positive");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw_config(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw_config("unknown key '" + where + "." + k + "'");
}

template <typename T>
void take(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw_config("bad value for '" + where + "." + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"preset", c.preset},
          {"swin",
           {{"in_channels", c.swin.in_channels},
            {"patch_size", c.swin.patch_size},
            {"embed_dim", c.swin.embed_dim},
            {"depths", c.swin.depths},
            {"heads", c.swin.heads},
            {"window_size", c.swin.window_size},
            {"mlp_ratio", c.swin.mlp_ratio}}},
          {"simmim",
           {{"mask_ratio", c.simmim.mask_ratio},
            {"mask_patch_size", c.simmim.mask_patch_size},
            {"loss_on_all_pixels", c.simmim.loss_on_all_pixels}}},
          {"head", {{"fusion_width", c.head.fusion_width}, {"pool_scales", c.head.pool_scales}}},
          {"unet", {{"in_channels", c.unet.in_channels}, {"depth", c.unet.depth}, {"base_width", c.unet.base_width}}},
          {"output_scale", c.output_scale}};
}

ModelConfig model_config_from_json(const json& j) {
  if (j.is_null()) return ModelConfig::toy();
  reject_unknown(j, {"preset", "swin", "simmim", "head", "unet", "output_scale"}, "model");
  std::string preset = "toy";
  take(j, "preset", preset, "model");
  ModelConfig c = ModelConfig::preset_named(preset);
  if (j.contains("swin")) {
    const auto& s = j["swin"];
    reject_unknown(s, {"in_channels", "patch_size", "embed_dim", "depths", "heads", "window_size", "mlp_ratio"},
                   "model.swin");
    take(s, "in_channels", c.swin.in_channels, "model.swin");
    take(s, "patch_size", c.swin.patch_size, "model.swin");
    take(s, "embed_dim", c.swin.embed_dim, "model.swin");
    take(s, "depths", c.swin.depths, "model.swin");
    take(s, "heads", c.swin.heads, "model.swin");
    take(s, "window_size", c.swin.window_size, "model.swin");
    take(s, "mlp_ratio", c.swin.mlp_ratio, "model.swin");
  }
  if (j.contains("simmim")) {
    const auto& s = j["simmim"];
    reject_unknown(s, {"mask_ratio", "mask_patch_size", "loss_on_all_pixels"}, "model.simmim");
    take(s, "mask_ratio", c.simmim.mask_ratio, "model.simmim");
    take(s, "mask_patch_size", c.simmim.mask_patch_size, "model.simmim");
    take(s, "loss_on_all_pixels", c.simmim.loss_on_all_pixels, "model.simmim");
  }
  if (j.contains("head")) {
    const auto& s = j["head"];
    reject_unknown(s, {"fusion_width", "pool_scales"}, "model.head");
    take(s, "fusion_width", c.head.fusion_width, "model.head");
    take(s, "pool_scales", c.head.pool_scales, "model.head");
  }
  if (j.contains("unet")) {
    const auto& s = j["unet"];
    reject_unknown(s, {"in_channels", "depth", "base_width"}, "model.unet");
    take(s, "in_channels", c.unet.in_channels, "model.unet");
    take(s, "depth", c.unet.depth, "model.unet");
    take(s, "base_width", c.unet.base_width, "model.unet");
  }
  take(j, "output_scale", c.output_scale, "model");
  c.validate();
  return c;
}

}  // namespace agb::models
