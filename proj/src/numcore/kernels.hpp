// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

// Shared helpers for the op translation units. Not installed.
#pragma once

#include <Eigen/Core>

#include "agb/numcore/tensor.hpp"

namespace agb::nc::kernels {

using A = TensorAccess;

inline void require_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype())
    throw_invalid(std::string(op) + ": dtype mismatch " + to_string(a.dtype()) + " vs " +
                  to_string(b.dtype()));
}

inline void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw_invalid(std::string(op) + ": undefined input tensor");
}

std::vector<std::int64_t> strides_of(const Shape& shape);

/// C[M,N] (+)= op(A)·op(B), row-major, with op as optional transpose.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, const T* a,
          const T* b, T* c, bool accumulate) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<Mat> C(c, m, n);
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (accumulate)
      C.noalias() += lhs * rhs;
    else
      C.noalias() = lhs * rhs;
  };
  if (!trans_a && !trans_b) {
    run(Eigen::Map<const Mat>(a, m, k), Eigen::Map<const Mat>(b, k, n));
  } else if (!trans_a && trans_b) {
    run(Eigen::Map<const Mat>(a, m, k), Eigen::Map<const Mat>(b, n, k).transpose());
  } else if (trans_a && !trans_b) {
    run(Eigen::Map<const Mat>(a, k, m).transpose(), Eigen::Map<const Mat>(b, k, n));
  } else {
    run(Eigen::Map<const Mat>(a, k, m).transpose(), Eigen::Map<const Mat>(b, n, k).transpose());
  }
}

}  // namespace agb::nc::kernels
