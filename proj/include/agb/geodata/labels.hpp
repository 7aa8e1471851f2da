// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <vector>

#include "agb/geodata/points.hpp"
#include "agb/geodata/raster.hpp"

namespace agb::geo {

/// Sparse label grid aligned with a raster. Pixels hit by one or more points
/// hold the mean AGB of those points; every other pixel holds nodata.
struct LabelGrid {
  int width = 0;
  int height = 0;
  std::vector<float> label;
  std::vector<std::uint8_t> valid;
  std::vector<std::int32_t> count;
  std::int64_t inside = 0;
  std::int64_t outside = 0;

  bool empty() const { return inside == 0; }
};

LabelGrid rasterize_labels(const std::vector<PointMeasurement>& points, const Raster& grid);

/// Throws the empty-labels data error when no point landed on the grid.
void require_labels(const LabelGrid& labels);

}  // namespace agb::geo
