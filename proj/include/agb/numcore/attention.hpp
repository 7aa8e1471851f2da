// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <vector>

#include "agb/numcore/tensor.hpp"

namespace agb::nc {

/// Splits x[B, H, W, C] into non-overlapping w×w windows after rolling H and
/// W by -shift. Result is [B·(H/w)·(W/w), w·w, C], windows in row-major order.
Tensor window_partition(const Tensor& x, std::int64_t window, std::int64_t shift);

/// Inverse of window_partition for a [B, H, W, C] target.
Tensor window_reverse(const Tensor& windows, std::int64_t window, std::int64_t shift, std::int64_t height,
                      std::int64_t width);

/// Scaled dot-product attention with `heads` heads over q, k, v[N, L, D].
/// rel_bias[heads, L, L] and attn_mask (either [L, L] or [nW, L, L] with N a
/// multiple of nW, -inf marking excluded pairs) are optional.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                            const Tensor& rel_bias, const Tensor& attn_mask);

/// Additive mask [nW, w·w, w·w] for shifted windows over an H×W grid: pairs
/// that were not adjacent before the cyclic roll get -inf.
Tensor shifted_window_mask(std::int64_t height, std::int64_t width, std::int64_t window,
                           std::int64_t shift, DType dtype);

/// Flattened (w·w)² lookup into a (2·table_window−1)² bias table for a
/// w×w window, w ≤ table_window.
std::vector<std::int64_t> relative_position_index(std::int64_t window, std::int64_t table_window);

}  // namespace agb::nc
