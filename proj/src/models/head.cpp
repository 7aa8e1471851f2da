// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/head.hpp"

#include "agb/error.hpp"
#include "agb/numcore/ops.hpp"
#include "layers.hpp"

namespace agb::models {

using nc::Tensor;

std::array<int, 4> stage_dims(const SwinConfig& cfg) {
  return {cfg.stage_dim(0), cfg.stage_dim(1), cfg.stage_dim(2), cfg.stage_dim(3)};
}

struct RegressionHead::Parts {
  std::vector<detail::Conv> ppm;
  detail::Conv bottleneck;
  std::array<detail::Conv, 3> lateral;
  std::array<detail::Conv, 3> fpn;
  detail::Conv fuse;
  detail::Conv up1, up2;
  detail::Conv out;
};

RegressionHead::~RegressionHead() = default;
RegressionHead::RegressionHead(RegressionHead&&) noexcept = default;

RegressionHead::RegressionHead(const HeadConfig& cfg, const std::array<int, 4>& dims, double output_scale,
                               ParamStore& store, nc::Prng& rng)
    : cfg_(cfg), output_scale_(output_scale), parts_(std::make_unique<Parts>()) {
  const int cf = cfg.fusion_width;
  if (cf < 4 || cf % 4 != 0) throw_invalid("head: fusion width must be a multiple of 4");
  detail::Builder b{store, rng, Component::decoder, "head."};
  for (std::size_t i = 0; i < cfg.pool_scales.size(); ++i)
    parts_->ppm.emplace_back(b.sub("ppm." + std::to_string(i)), dims[3], cf, 1);
  parts_->bottleneck =
      detail::Conv(b.sub("ppm_bottleneck"), dims[3] + static_cast<int>(cfg.pool_scales.size()) * cf, cf, 3, 1, 1);
  for (int i = 0; i < 3; ++i) {
    parts_->lateral[i] = detail::Conv(b.sub("lateral." + std::to_string(i)), dims[i], cf, 1);
    parts_->fpn[i] = detail::Conv(b.sub("fpn." + std::to_string(i)), cf, cf, 3, 1, 1);
  }
  parts_->fuse = detail::Conv(b.sub("fuse"), 4 * cf, cf, 3, 1, 1);
  parts_->up1 = detail::Conv(b.sub("up1"), cf, 4 * (cf / 2), 3, 1, 1);
  parts_->up2 = detail::Conv(b.sub("up2"), cf / 2, 4 * (cf / 4), 3, 1, 1);
  parts_->out = detail::Conv(b.sub("out"), cf / 4, 1, 1);
}

Tensor RegressionHead::forward(const std::vector<Tensor>& f) const {
  if (f.size() != 4) throw_invalid("head: expected 4 feature scales, got " + std::to_string(f.size()));
  const auto& P = *parts_;
  const std::int64_t h3 = f[3].dim(2), w3 = f[3].dim(3);
  std::vector<Tensor> pyramid{f[3]};
  for (std::size_t i = 0; i < P.ppm.size(); ++i) {
    const int s = cfg_.pool_scales[i];
    Tensor p = nc::gelu(P.ppm[i](nc::adaptive_avg_pool2d(f[3], s, s)));
    pyramid.push_back(nc::bilinear_resize(p, h3, w3));
  }
  std::array<Tensor, 4> lat;
  lat[3] = nc::gelu(P.bottleneck(nc::concat(pyramid, 1)));
  for (int i = 0; i < 3; ++i) lat[i] = nc::gelu(P.lateral[i](f[static_cast<std::size_t>(i)]));
  for (int i = 2; i >= 0; --i)
    lat[i] = nc::add(lat[i], nc::bilinear_resize(lat[i + 1], lat[i].dim(2), lat[i].dim(3)));
  const std::int64_t h0 = lat[0].dim(2), w0 = lat[0].dim(3);
  std::vector<Tensor> levels;
  for (int i = 0; i < 3; ++i) levels.push_back(nc::gelu(P.fpn[i](lat[i])));
  levels.push_back(lat[3]);
  for (std::size_t i = 1; i < levels.size(); ++i) levels[i] = nc::bilinear_resize(levels[i], h0, w0);
  Tensor x = nc::gelu(P.fuse(nc::concat(levels, 1)));
  x = nc::relu(nc::pixel_shuffle(P.up1(x), 2));
  x = nc::relu(nc::pixel_shuffle(P.up2(x), 2));
  return nc::scale(nc::relu(P.out(x)), output_scale_);
}

GfmRegressor::GfmRegressor(const ModelConfig& cfg, ParamStore& store, nc::Prng& rng)
    : encoder_(cfg.swin, store, rng), head_(cfg.head, stage_dims(cfg.swin), cfg.output_scale, store, rng) {}

}  // namespace agb::models
