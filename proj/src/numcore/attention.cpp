// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/numcore/attention.hpp"

#include <cmath>
#include <limits>

#include "agb/numcore/ops.hpp"

namespace agb::nc {

Tensor window_partition(const Tensor& x, std::int64_t window, std::int64_t shift) {
  if (!x.defined() || x.ndim() != 4) throw_invalid("window_partition: expected [B, H, W, C]");
  const std::int64_t b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (window < 1 || h % window != 0 || w % window != 0)
    throw_invalid("window_partition: " + std::to_string(h) + "x" + std::to_string(w) +
                  " grid not divisible by window " + std::to_string(window));
  if (shift < 0 || shift >= window) throw_invalid("window_partition: shift must lie in [0, window)");
  Tensor t = shift > 0 ? roll(x, {-shift, -shift}, {1, 2}) : x;
  t = reshape(t, {b, h / window, window, w / window, window, c});
  t = permute(t, {0, 1, 3, 2, 4, 5});
  return reshape(t, {b * (h / window) * (w / window), window * window, c});
}

Tensor window_reverse(const Tensor& windows, std::int64_t window, std::int64_t shift, std::int64_t height,
                      std::int64_t width) {
  if (!windows.defined() || windows.ndim() != 3) throw_invalid("window_reverse: expected [N, w*w, C]");
  if (window < 1 || height % window != 0 || width % window != 0)
    throw_invalid("window_reverse: grid not divisible by window");
  if (shift < 0 || shift >= window) throw_invalid("window_reverse: shift must lie in [0, window)");
  const std::int64_t nh = height / window, nw = width / window;
  const std::int64_t c = windows.dim(2);
  if (windows.dim(1) != window * window || windows.dim(0) % (nh * nw) != 0)
    throw_invalid("window_reverse: window tensor does not match the grid");
  const std::int64_t b = windows.dim(0) / (nh * nw);
  Tensor t = reshape(windows, {b, nh, nw, window, window, c});
  t = permute(t, {0, 1, 3, 2, 4, 5});
  t = reshape(t, {b, height, width, c});
  return shift > 0 ? roll(t, {shift, shift}, {1, 2}) : t;
}

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                            const Tensor& rel_bias, const Tensor& attn_mask) {
  if (!q.defined() || !k.defined() || !v.defined() || q.ndim() != 3)
    throw_invalid("multi_head_attention: expected q, k, v of shape [N, L, D]");
  if (k.shape() != q.shape() || v.shape() != q.shape())
    throw_invalid("multi_head_attention: q, k, v shapes differ");
  const std::int64_t n = q.dim(0), l = q.dim(1), d = q.dim(2);
  if (heads < 1 || d % heads != 0)
    throw_invalid("multi_head_attention: D=" + std::to_string(d) + " not divisible by heads=" +
                  std::to_string(heads));
  const std::int64_t hd = d / heads;
  auto split = [&](const Tensor& t) { return permute(reshape(t, {n, l, heads, hd}), {0, 2, 1, 3}); };
  Tensor qh = split(q), kh = split(k), vh = split(v);
  Tensor logits = scale(matmul(qh, permute(kh, {0, 1, 3, 2})), 1.0 / std::sqrt(static_cast<double>(hd)));
  if (rel_bias.defined()) {
    if (rel_bias.shape() != Shape{heads, l, l})
      throw_invalid("multi_head_attention: rel_bias must be [heads, L, L]");
    logits = add(logits, reshape(rel_bias, {1, heads, l, l}));
  }
  if (attn_mask.defined()) {
    if (attn_mask.ndim() == 2) {
      if (attn_mask.shape() != Shape{l, l}) throw_invalid("multi_head_attention: mask must be [L, L]");
      logits = add(logits, reshape(attn_mask, {1, 1, l, l}));
    } else if (attn_mask.ndim() == 3) {
      const std::int64_t nw = attn_mask.dim(0);
      if (attn_mask.dim(1) != l || attn_mask.dim(2) != l || n % nw != 0)
        throw_invalid("multi_head_attention: mask must be [nW, L, L] with N divisible by nW");
      logits = reshape(logits, {n / nw, nw, heads, l, l});
      logits = add(logits, reshape(attn_mask, {1, nw, 1, l, l}));
      logits = reshape(logits, {n, heads, l, l});
    } else {
      throw_invalid("multi_head_attention: mask must be 2-D or 3-D");
    }
  }
  Tensor attn = softmax(logits);
  Tensor out = matmul(attn, vh);
  return reshape(permute(out, {0, 2, 1, 3}), {n, l, d});
}

Tensor shifted_window_mask(std::int64_t height, std::int64_t width, std::int64_t window,
                           std::int64_t shift, DType dtype) {
  if (height % window != 0 || width % window != 0) throw_invalid("shifted_window_mask: grid not divisible");
  // Region labels in rolled coordinates: three bands per axis.
  auto band = [&](std::int64_t i, std::int64_t n) -> int {
    if (i < n - window) return 0;
    if (i < n - shift) return 1;
    return 2;
  };
  const std::int64_t nh = height / window, nw = width / window, l = window * window;
  std::vector<double> mask(static_cast<std::size_t>(nh * nw * l * l), 0.0);
  const double ninf = -std::numeric_limits<double>::infinity();
  for (std::int64_t wy = 0; wy < nh; ++wy)
    for (std::int64_t wx = 0; wx < nw; ++wx) {
      std::vector<int> label(static_cast<std::size_t>(l));
      for (std::int64_t i = 0; i < window; ++i)
        for (std::int64_t j = 0; j < window; ++j)
          label[static_cast<std::size_t>(i * window + j)] =
              band(wy * window + i, height) * 3 + band(wx * window + j, width);
      const std::int64_t base = (wy * nw + wx) * l * l;
      for (std::int64_t a = 0; a < l; ++a)
        for (std::int64_t b = 0; b < l; ++b)
          if (label[static_cast<std::size_t>(a)] != label[static_cast<std::size_t>(b)])
            mask[static_cast<std::size_t>(base + a * l + b)] = ninf;
    }
  return Tensor::from(Shape{nh * nw, l, l}, mask, dtype);
}

std::vector<std::int64_t> relative_position_index(std::int64_t window, std::int64_t table_window) {
  if (window > table_window) throw_invalid("relative_position_index: window exceeds table size");
  const std::int64_t l = window * window, span = 2 * table_window - 1;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(l * l));
  for (std::int64_t a = 0; a < l; ++a)
    for (std::int64_t b = 0; b < l; ++b) {
      const std::int64_t dy = a / window - b / window + table_window - 1;
      const std::int64_t dx = a % window - b % window + table_window - 1;
      idx[static_cast<std::size_t>(a * l + b)] = dy * span + dx;
    }
  return idx;
}

}  // namespace agb::nc
