// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/unet.hpp"

#include <vector>

#include "agb/error.hpp"
#include "agb/numcore/ops.hpp"
#include "layers.hpp"

namespace agb::models {

using nc::Tensor;

namespace {

struct DoubleConv {
  detail::Conv a, b;
  DoubleConv() = default;
  DoubleConv(const detail::Builder& bd, int in, int out)
      : a(bd.sub("conv1"), in, out, 3, 1, 1), b(bd.sub("conv2"), out, out, 3, 1, 1) {}
  Tensor operator()(const Tensor& x) const { return nc::relu(b(nc::relu(a(x)))); }
};

}  // namespace

struct UNet::Parts {
  std::vector<DoubleConv> down;
  DoubleConv bottom;
  std::vector<detail::Conv> up;
  std::vector<DoubleConv> merge;
  detail::Conv out;
};

UNet::~UNet() = default;
UNet::UNet(UNet&&) noexcept = default;

UNet::UNet(const UNetConfig& cfg, double output_scale, ParamStore& store, nc::Prng& rng)
    : cfg_(cfg), output_scale_(output_scale), parts_(std::make_unique<Parts>()) {
  if (cfg.depth < 1 || cfg.base_width < 1) throw_invalid("unet: depth and width must be positive");
  detail::Builder b{store, rng, Component::decoder, "unet.", Init::he_normal};
  int in = cfg.in_channels;
  for (int l = 0; l < cfg.depth; ++l) {
    const int w = cfg.base_width << l;
    parts_->down.emplace_back(b.sub("down." + std::to_string(l)), in, w);
    in = w;
  }
  const int bottom = cfg.base_width << cfg.depth;
  parts_->bottom = DoubleConv(b.sub("bottom"), in, bottom);
  in = bottom;
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const int w = cfg.base_width << l;
    parts_->up.emplace_back(b.sub("up." + std::to_string(l)), in, 4 * w, 1);
    parts_->merge.emplace_back(b.sub("merge." + std::to_string(l)), 2 * w, w);
    in = w;
  }
  parts_->out = detail::Conv(b.sub("out"), cfg.base_width, 1, 1);
}

Tensor UNet::forward(const Tensor& image) const {
  if (image.ndim() != 4 || image.dim(1) != cfg_.in_channels)
    throw_invalid("unet: expected input [B, " + std::to_string(cfg_.in_channels) + ", H, W], got " +
                  nc::to_string(image.shape()));
  const std::int64_t m = std::int64_t{1} << cfg_.depth;
  if (image.dim(2) % m || image.dim(3) % m)
    throw_invalid("unet: H and W must be divisible by " + std::to_string(m) + ", got " + nc::to_string(image.shape()));
  const auto& P = *parts_;
  std::vector<Tensor> skips;
  Tensor x = image;
  for (const auto& level : P.down) {
    x = level(x);
    skips.push_back(x);
    x = nc::max_pool2d(x, 2, 2);
  }
  x = P.bottom(x);
  for (std::size_t i = 0; i < P.up.size(); ++i) {
    x = nc::pixel_shuffle(P.up[i](x), 2);
    x = P.merge[i](nc::concat({skips[skips.size() - 1 - i], x}, 1));
  }
  return nc::scale(nc::relu(P.out(x)), output_scale_);
}

}  // namespace agb::models
