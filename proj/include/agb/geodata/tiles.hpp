// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agb/geodata/labels.hpp"
#include "agb/geodata/points.hpp"
#include "agb/geodata/raster.hpp"

namespace agb::geo {

inline constexpr int kImageBands = 6;

struct LabeledTile {
  std::string id;
  int row0 = 0;
  int col0 = 0;
  int size = 0;
  /// [6, size, size], band-major.
  std::vector<float> image;
  /// [size, size]; nodata wherever valid is 0.
  std::vector<float> label;
  std::vector<std::uint8_t> valid;
  EcoRegion ecoregion = EcoRegion::none;
  double origin_x = 0.0;
  double origin_y = 0.0;
  /// Image pixels that were nodata in the composite and got the band mean.
  std::int64_t filled_pixels = 0;

  std::int64_t valid_count() const;
};

struct TilingOptions {
  int tile_size = 64;
  int stride = 64;
  double max_nodata_frac = 0.5;
};

struct TilingStats {
  std::int64_t scanned = 0;
  std::int64_t dropped_nodata = 0;
  std::int64_t dropped_unlabeled = 0;
  std::int64_t dropped_no_region = 0;
};

std::string tile_id(int row0, int col0);

/// Cuts the composite into T×T windows. A pixel counts as nodata when any
/// band is nodata. Windows above the nodata threshold, without a valid label,
/// or without any eco-region code are dropped.
std::vector<LabeledTile> tile_dataset(const Raster& composite, const LabelGrid& labels, const Raster& ecomap,
                                      const TilingOptions& opts, TilingStats* stats = nullptr);

/// Eco-region holding the most pixels in the window; ties go to the lower id.
EcoRegion majority_region(const Raster& ecomap, int row0, int col0, int size);

struct BandStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Per-band population moments over every image pixel of the given tiles.
/// A band with zero spread gets std 1 and a warning.
BandStats compute_band_stats(const std::vector<const LabeledTile*>& tiles);

/// image ← (image − mean) / std, band by band.
void normalize(LabeledTile& tile, const BandStats& stats);

}  // namespace agb::geo
