// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <vector>

#include "agb/numcore/tensor.hpp"

// Differentiable primitives. Every op records a backward rule when any input
// requires grad and grad mode is on. Shape errors throw agb::Error with
// ErrorKind::invalid_argument.
namespace agb::nc {

// Elementwise, with numpy-style broadcasting for the binary forms.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor relu(const Tensor& x);
/// Exact form 0.5·x·(1 + erf(x/√2)).
Tensor gelu(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor abs(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sums a broadcast result back down to `shape` (the adjoint of broadcasting).
Tensor sum_to(const Tensor& x, const Shape& shape);

/// Batched matrix product over the last two axes. Leading axes must match,
/// or `b` may be a plain 2-D matrix shared across the batch.
Tensor matmul(const Tensor& a, const Tensor& b);
/// x[..., in] · weightᵀ[in, out] + bias[out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
/// Cross-correlation over NCHW input; bias may be undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<int>& axes);
/// Cyclic shift: out[i] = x[(i - shift) mod n] along each listed axis.
Tensor roll(const Tensor& x, const std::vector<std::int64_t>& shifts, const std::vector<int>& axes);
/// Zero padding of one axis.
Tensor pad(const Tensor& x, int axis, std::int64_t before, std::int64_t after);
Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length);
Tensor concat(const std::vector<Tensor>& parts, int axis);

/// [B, C·r², H, W] → [B, C, r·H, r·W].
Tensor pixel_shuffle(const Tensor& x, int r);
/// Exact inverse of pixel_shuffle.
Tensor pixel_unshuffle(const Tensor& x, int r);

/// Normalizes over the last axis, then applies the affine weight and bias.
Tensor layer_norm(const Tensor& x, const Tensor& weight, const Tensor& bias, double eps = 1e-5);
/// Softmax over the last axis; -inf logits receive exactly zero weight.
Tensor softmax(const Tensor& x);

Tensor max_pool2d(const Tensor& x, int kernel, int stride);
/// Adaptive average pooling of NCHW input to [out_h, out_w].
Tensor adaptive_avg_pool2d(const Tensor& x, std::int64_t out_h, std::int64_t out_w);
/// Bilinear resize of NCHW input (half-pixel centers, edge clamped).
Tensor bilinear_resize(const Tensor& x, std::int64_t out_h, std::int64_t out_w);

/// Row lookup: table[R, C], indices into R → [indices.size(), C].
Tensor gather_rows(const Tensor& table, const std::vector<std::int64_t>& indices);

/// sqrt(Σ_valid (pred − label)² / N_valid). Invalid positions are never read.
Tensor masked_rmse(const Tensor& pred, const Tensor& label, const std::vector<std::uint8_t>& valid);
/// Σ_mask |pred − target| / N_mask, differentiable in both pred and target.
Tensor masked_mean_abs(const Tensor& pred, const Tensor& target,
                       const std::vector<std::uint8_t>& mask);

/// Branch choices of the piecewise-linear ops (relu, abs, max_pool2d).
/// While a tape is active and recording, every such call appends its
/// choices; while replaying, calls reuse the recorded choices in order. The
/// replayed function is the smooth piece that contains the recording point,
/// so finite differences never straddle a kink. One tape per thread.
class GateTape {
 public:
  enum class Mode { record, replay };

  GateTape();
  ~GateTape();
  GateTape(const GateTape&) = delete;
  GateTape& operator=(const GateTape&) = delete;

  void set_mode(Mode mode) {
    mode_ = mode;
    cursor_ = 0;
  }
  /// Records `gates`, or overwrites them with the next recorded entry.
  void sync(std::vector<std::int64_t>& gates);

 private:
  Mode mode_ = Mode::record;
  std::size_t cursor_ = 0;
  std::vector<std::vector<std::int64_t>> entries_;
  GateTape* previous_;
};

/// The tape installed on this thread, or nullptr.
GateTape* active_gate_tape();

}  // namespace agb::nc
