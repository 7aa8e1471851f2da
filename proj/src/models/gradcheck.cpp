// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "agb/error.hpp"
#include "agb/models/model.hpp"
#include "agb/numcore/ops.hpp"

namespace agb::models {

using nc::Tensor;

namespace {

Tensor randn(nc::Prng& rng, nc::Shape shape) {
  std::vector<double> v(static_cast<std::size_t>(nc::numel(shape)));
  for (auto& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), v, nc::DType::f64);
}

std::vector<Tensor> leaves_with_prefix(const ParamStore& store, const std::string& prefix) {
  std::vector<Tensor> out;
  for (const auto& e : store.entries())
    if (e.trainable && e.name.rfind(prefix, 0) == 0) out.push_back(e.value);
  return out;
}

/// Moves every parameter to a generic, well-scaled point: fan-in scaled
/// weights, nonzero biases and norm affines, so that all paths carry
/// gradients of comparable size.
void condition(ParamStore& store, nc::Prng& rng) {
  for (auto& e : store.entries()) {
    auto d = e.value.mutable_leaf_data<double>();
    const bool is_weight = e.name.size() >= 6 && e.name.compare(e.name.size() - 6, 6, "weight") == 0;
    double sd = 0.2, offset = 0.0;
    if (e.shape.size() >= 2 && e.name.find("relative_position_bias_table") == std::string::npos) {
      sd = 1.0 / std::sqrt(static_cast<double>(nc::numel(e.shape) / e.shape[0]));
    } else if (e.name == "head.out.bias" || e.name == "unet.out.bias") {
      offset = 1.0;
    } else if (e.shape.size() == 1 && is_weight) {
      offset = 1.0;
    } else if (e.name.find("mask_token") != std::string::npos) {
      sd = 0.5;
    }
    for (auto& x : d) x = offset + sd * rng.normal();
  }
}

nc::GradCheckReport projected(const std::string& name, nc::Prng& rng, const nc::GradCheckOptions& opts,
                              std::vector<Tensor> leaves, const std::function<Tensor()>& f) {
  Tensor proj;
  {
    nc::NoGradGuard guard;
    proj = nc::random_projection(f(), rng);
  }
  return nc::check_gradients(name, [&] { return nc::sum(nc::mul(f(), proj)); }, std::move(leaves), rng, opts);
}

}  // namespace

std::vector<std::string> model_check_names() { return {"head", "simmim", "swin_block", "unet"}; }

nc::GradCheckReport run_model_check(const std::string& name, std::uint64_t seed, nc::GradCheckOptions opts) {
  nc::Prng rng(seed);
  ModelConfig cfg = ModelConfig::toy();
  cfg.output_scale = 1.0;
  opts.freeze_gates = true;
  if (opts.step == nc::GradCheckOptions{}.step) opts.step = 1e-4;
  if (name == "swin_block") {
    auto m = make_model(ModelKind::gfm, cfg, seed, nc::DType::f64);
    condition(*m.store, rng);
    Tensor x = randn(rng, {1, 8, 8, cfg.swin.embed_dim});
    auto leaves = leaves_with_prefix(*m.store, "encoder.layers.0.blocks.1.");
    leaves.push_back(x);
    const auto& enc = m.gfm->encoder();
    return projected(name, rng, opts, leaves, [&] { return enc.block_forward(0, 1, x); });
  }
  if (name == "simmim") {
    opts.max_entries_per_leaf = std::min(opts.max_entries_per_leaf, 3);
    auto m = make_model(ModelKind::simmim, cfg, seed, nc::DType::f64);
    condition(*m.store, rng);
    Tensor img = randn(rng, {1, 6, 32, 32});
    Tensor target = randn(rng, {1, 6, 32, 32});
    const int g = 32 / cfg.simmim.mask_patch_size;
    std::vector<PatchMask> masks{random_patch_mask(g, g, cfg.simmim.mask_ratio, rng)};
    auto leaves = leaves_with_prefix(*m.store, "");
    leaves.push_back(img);
    leaves.push_back(target);
    const auto& sm = *m.simmim;
    return nc::check_gradients(name, [&] { return sm.forward(img, masks, target).loss; }, leaves, rng, opts);
  }
  if (name == "head") {
    opts.max_entries_per_leaf = std::min(opts.max_entries_per_leaf, 6);
    auto m = make_model(ModelKind::gfm, cfg, seed, nc::DType::f64);
    condition(*m.store, rng);
    freeze_encoder(*m.store);
    Tensor img = randn(rng, {1, 6, 32, 32});
    const auto& gfm = *m.gfm;
    return projected(name, rng, opts, leaves_with_prefix(*m.store, "head."), [&] { return gfm.forward(img); });
  }
  if (name == "unet") {
    opts.max_entries_per_leaf = std::min(opts.max_entries_per_leaf, 6);
    auto m = make_model(ModelKind::unet, cfg, seed, nc::DType::f64);
    condition(*m.store, rng);
    Tensor img = randn(rng, {1, 6, 32, 32});
    auto leaves = leaves_with_prefix(*m.store, "");
    leaves.push_back(img);
    const auto& un = *m.unet;
    return projected(name, rng, opts, leaves, [&] { return un.forward(img); });
  }
  throw_invalid("unknown model check '" + name + "'");
}

}  // namespace agb::models
