// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <string>

namespace agb {

/// Provenance stamped into every file the pipeline writes.
struct ArtifactTags {
  std::string config_hash;
  std::uint64_t seed = 0;

  bool empty() const { return config_hash.empty(); }
};

}  // namespace agb
