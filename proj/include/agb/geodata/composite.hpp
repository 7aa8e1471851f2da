// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <vector>

#include "agb/geodata/raster.hpp"

namespace agb::geo {

/// Per-pixel, per-band median over observations that are clear in the cloud
/// mask and not nodata. An even count averages the two middle values; a pixel
/// with no usable observation becomes nodata.
Raster median_composite(const std::vector<Scene>& scenes);

}  // namespace agb::geo
