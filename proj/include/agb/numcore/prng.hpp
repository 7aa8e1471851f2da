// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace agb::nc {

/// xoshiro256** seeded through splitmix64. Output depends only on the seed
/// and the call sequence; no libstdc++ distributions are involved.
class Prng {
 public:
  explicit Prng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one pair consumed per call).
  double normal();
  /// Normal with standard deviation sd, redrawn outside ±bound·sd.
  double truncated_normal(double sd, double bound = 2.0);

  /// Independent child stream; advances this stream's split counter.
  Prng split();
  /// Child stream addressed by key; does not change this stream.
  Prng fork(std::uint64_t key) const;

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      using std::swap;
      swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_;
  std::uint64_t splits_ = 0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace agb::nc
