// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/swin.hpp"

#include <algorithm>

#include "agb/error.hpp"
#include "agb/numcore/attention.hpp"
#include "layers.hpp"

namespace agb::models {

using nc::Tensor;
using detail::Builder;

struct SwinEncoder::Block {
  int dim = 0, heads = 0, window = 0, shift = 0;
  detail::Norm norm1, norm2;
  detail::Linear q, k, v, proj, fc1, fc2;
  Tensor rel_table;  // [(2w-1)², heads]

  Block(const Builder& b, int dim_, int heads_, int window_, int shift_, int mlp_ratio)
      : dim(dim_), heads(heads_), window(window_), shift(shift_),
        norm1(b.sub("norm1"), dim_),
        norm2(b.sub("norm2"), dim_),
        q(b.sub("attn.q"), dim_, dim_),
        k(b.sub("attn.k"), dim_, dim_),
        v(b.sub("attn.v"), dim_, dim_),
        proj(b.sub("attn.proj"), dim_, dim_),
        fc1(b.sub("mlp.fc1"), dim_, static_cast<std::int64_t>(dim_) * mlp_ratio),
        fc2(b.sub("mlp.fc2"), static_cast<std::int64_t>(dim_) * mlp_ratio, dim_) {
    const std::int64_t span = 2 * window_ - 1;
    rel_table = b.zeros("attn.relative_position_bias_table", {span * span, heads_});
  }

  Tensor attention(const Tensor& x, bool shift_on) const {
    const std::int64_t H = x.dim(1), W = x.dim(2);
    std::int64_t win = window, sh = shift_on ? shift : 0;
    if (std::min(H, W) <= win) {
      win = std::min(H, W);
      sh = 0;
    }
    const std::int64_t ph = (win - H % win) % win, pw = (win - W % win) % win;
    Tensor t = x;
    if (ph > 0) t = nc::pad(t, 1, 0, ph);
    if (pw > 0) t = nc::pad(t, 2, 0, pw);
    const std::int64_t Hp = H + ph, Wp = W + pw, L = win * win;
    Tensor windows = nc::window_partition(t, win, sh);
    const auto index = nc::relative_position_index(win, window);
    Tensor bias = nc::permute(nc::reshape(nc::gather_rows(rel_table, index), {L, L, heads}), {2, 0, 1});
    Tensor mask = sh > 0 ? nc::shifted_window_mask(Hp, Wp, win, sh, x.dtype()) : Tensor();
    Tensor attn = nc::multi_head_attention(q(windows), k(windows), v(windows), heads, bias, mask);
    Tensor out = nc::window_reverse(proj(attn), win, sh, Hp, Wp);
    if (ph > 0) out = nc::slice(out, 1, 0, H);
    if (pw > 0) out = nc::slice(out, 2, 0, W);
    return out;
  }

  Tensor operator()(const Tensor& x, bool shift_on) const {
    Tensor h = nc::add(x, attention(norm1(x), shift_on));
    return nc::add(h, fc2(nc::gelu(fc1(norm2(h)))));
  }
};

struct SwinEncoder::Stage {
  std::vector<Block> blocks;
  detail::Norm out_norm;
  bool has_merge = false;
  detail::Norm merge_norm;
  detail::Linear merge;
};

struct SwinEncoder::Parts {
  detail::Conv patch_embed;
  detail::Norm embed_norm;
  std::vector<Stage> stages;
};

SwinEncoder::~SwinEncoder() = default;
SwinEncoder::SwinEncoder(SwinEncoder&&) noexcept = default;

SwinEncoder::SwinEncoder(const SwinConfig& cfg, ParamStore& store, nc::Prng& rng)
    : cfg_(cfg), parts_(std::make_unique<Parts>()) {
  cfg_.validate();
  Builder root{store, rng, Component::encoder, "encoder."};
  parts_->patch_embed = detail::Conv(root.sub("patch_embed"), cfg.in_channels, cfg.embed_dim, cfg.patch_size,
                                     cfg.patch_size, 0);
  parts_->embed_norm = detail::Norm(root.sub("patch_embed.norm"), cfg.embed_dim);
  for (int s = 0; s < 4; ++s) {
    const int dim = cfg.stage_dim(s);
    Builder sb = root.sub("layers." + std::to_string(s));
    Stage stage;
    for (int b = 0; b < cfg.depths[s]; ++b)
      stage.blocks.emplace_back(sb.sub("blocks." + std::to_string(b)), dim, cfg.heads[s], cfg.window_size,
                                b % 2 == 1 ? cfg.window_size / 2 : 0, cfg.mlp_ratio);
    stage.out_norm = detail::Norm(root.sub("norm" + std::to_string(s)), dim);
    if (s < 3) {
      stage.has_merge = true;
      stage.merge_norm = detail::Norm(sb.sub("downsample.norm"), 4 * dim);
      stage.merge = detail::Linear(sb.sub("downsample.reduction"), 4 * dim, 2 * dim, false);
    }
    parts_->stages.push_back(std::move(stage));
  }
}

namespace {

Tensor patch_merge(const Tensor& x, const detail::Norm& norm, const detail::Linear& reduce) {
  const std::int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  if (H % 2 || W % 2) throw_invalid("patch merging needs even token grids");
  Tensor t = nc::reshape(x, {B, H / 2, 2, W / 2, 2, C});
  t = nc::permute(t, {0, 1, 3, 4, 2, 5});
  t = nc::reshape(t, {B, H / 2, W / 2, 4 * C});
  return reduce(norm(t));
}

}  // namespace

Tensor SwinEncoder::block_forward(int stage, int block, const Tensor& x) const {
  if (stage < 0 || stage >= 4 || block < 0 || block >= cfg_.depths[stage]) throw_invalid("no such encoder block");
  return parts_->stages[stage].blocks[block](x, shift_enabled_);
}

std::vector<Tensor> SwinEncoder::forward(const Tensor& image, const Tensor& token_mask,
                                         const Tensor& mask_token) const {
  if (image.ndim() != 4 || image.dim(1) != cfg_.in_channels)
    throw_invalid("swin: expected input [B, " + std::to_string(cfg_.in_channels) + ", H, W], got " +
                  nc::to_string(image.shape()));
  const std::int64_t total_stride = static_cast<std::int64_t>(cfg_.patch_size) * 8;
  if (image.dim(2) % total_stride || image.dim(3) % total_stride)
    throw_invalid("swin: H and W must be divisible by " + std::to_string(total_stride) + ", got " +
                  nc::to_string(image.shape()));
  Tensor x = nc::permute(parts_->patch_embed(image), {0, 2, 3, 1});
  x = parts_->embed_norm(x);
  if (token_mask.defined()) {
    if (!mask_token.defined()) throw_invalid("swin: token mask given without a mask token");
    const nc::Shape want{x.dim(0), x.dim(1), x.dim(2), 1};
    if (token_mask.shape() != want)
      throw_invalid("swin: token mask must be " + nc::to_string(want) + ", got " + nc::to_string(token_mask.shape()));
    x = nc::add(x, nc::mul(token_mask, nc::sub(mask_token, x)));
  }
  std::vector<Tensor> features;
  for (const auto& stage : parts_->stages) {
    for (const auto& block : stage.blocks) x = block(x, shift_enabled_);
    features.push_back(nc::permute(stage.out_norm(x), {0, 3, 1, 2}));
    if (stage.has_merge) x = patch_merge(x, stage.merge_norm, stage.merge);
  }
  return features;
}

}  // namespace agb::models
