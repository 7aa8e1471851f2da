// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/simmim.hpp"

#include <cmath>
#include <numeric>

#include "agb/error.hpp"
#include "agb/numcore/ops.hpp"
#include "layers.hpp"

namespace agb::models {

using nc::Tensor;

std::int64_t PatchMask::masked() const {
  std::int64_t n = 0;
  for (auto c : cells) n += c != 0;
  return n;
}

PatchMask random_patch_mask(int rows, int cols, double ratio, nc::Prng& rng) {
  if (rows < 1 || cols < 1) throw_invalid("mask grid must be non-empty");
  if (!(ratio > 0.0 && ratio < 1.0)) throw_invalid("mask ratio must lie in (0, 1)");
  const int n = rows * cols;
  const auto k = static_cast<int>(std::floor(ratio * n + 0.5));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  PatchMask m{rows, cols, std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0)};
  for (int i = 0; i < k; ++i) m.cells[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  return m;
}

SimMIM::SimMIM(const ModelConfig& cfg, ParamStore& store, nc::Prng& rng)
    : cfg_(cfg), encoder_(cfg.swin, store, rng) {
  cfg_.validate();
  detail::Builder b{store, rng, Component::decoder, "simmim."};
  mask_token_ = b.zeros("mask_token", {cfg.swin.embed_dim});
  const int stride = cfg.swin.patch_size * 8;
  const std::int64_t out = static_cast<std::int64_t>(stride) * stride * cfg.swin.in_channels;
  dec_w_ = b.weight("decoder.weight", {out, cfg.swin.stage_dim(3), 1, 1});
  dec_b_ = b.zeros("decoder.bias", {out});
}

Tensor SimMIM::token_mask(const std::vector<PatchMask>& masks, std::int64_t ht, std::int64_t wt,
                          nc::DType dtype) const {
  const int per = cfg_.simmim.mask_patch_size / cfg_.swin.patch_size;
  std::vector<double> m(static_cast<std::size_t>(masks.size() * ht * wt), 0.0);
  for (std::size_t b = 0; b < masks.size(); ++b) {
    const auto& pm = masks[b];
    if (pm.rows * per != ht || pm.cols * per != wt)
      throw_invalid("simmim: patch mask grid does not match the image size");
    for (std::int64_t r = 0; r < ht; ++r)
      for (std::int64_t c = 0; c < wt; ++c)
        m[(b * ht + r) * wt + c] = pm.cells[static_cast<std::size_t>((r / per) * pm.cols + c / per)] ? 1.0 : 0.0;
  }
  return Tensor::from({static_cast<std::int64_t>(masks.size()), ht, wt, 1}, m, dtype);
}

std::vector<std::uint8_t> SimMIM::pixel_mask(const std::vector<PatchMask>& masks, std::int64_t channels,
                                             std::int64_t height, std::int64_t width) const {
  const int ps = cfg_.simmim.mask_patch_size;
  std::vector<std::uint8_t> m(static_cast<std::size_t>(masks.size() * channels * height * width));
  for (std::size_t b = 0; b < masks.size(); ++b)
    for (std::int64_t ch = 0; ch < channels; ++ch)
      for (std::int64_t r = 0; r < height; ++r)
        for (std::int64_t c = 0; c < width; ++c)
          m[((b * channels + ch) * height + r) * width + c] =
              cfg_.simmim.loss_on_all_pixels ? 1 : masks[b].cells[static_cast<std::size_t>((r / ps) * masks[b].cols + c / ps)];
  return m;
}

SimMIM::Output SimMIM::forward(const Tensor& image, const std::vector<PatchMask>& masks, const Tensor& target) const {
  if (image.ndim() != 4) throw_invalid("simmim: expected image [B, C, H, W]");
  const std::int64_t B = image.dim(0), C = image.dim(1), H = image.dim(2), W = image.dim(3);
  if (static_cast<std::int64_t>(masks.size()) != B) throw_invalid("simmim: need one mask per sample");
  const int ps = cfg_.simmim.mask_patch_size;
  if (H % ps || W % ps) throw_invalid("simmim: image size must be divisible by the mask patch size");
  for (const auto& m : masks)
    if (m.masked() == 0 && !cfg_.simmim.loss_on_all_pixels) throw_invalid("simmim: mask hides no patch");
  const int p = cfg_.swin.patch_size;
  Tensor tmask = token_mask(masks, H / p, W / p, image.dtype());
  auto feats = encoder_.forward(image, tmask, mask_token_);
  Tensor recon = nc::pixel_shuffle(nc::conv2d(feats[3], dec_w_, dec_b_, 1, 0), p * 8);
  const Tensor& tgt = target.defined() ? target : image;
  if (tgt.shape() != recon.shape()) throw_invalid("simmim: target shape must match the image");
  Tensor loss = nc::masked_mean_abs(recon, tgt, pixel_mask(masks, C, H, W));
  return {recon, loss};
}

}  // namespace agb::models
