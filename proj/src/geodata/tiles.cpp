// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/geodata/tiles.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "agb/error.hpp"
#include "agb/log.hpp"

namespace agb::geo {

std::int64_t LabeledTile::valid_count() const {
  std::int64_t n = 0;
  for (auto v : valid) n += v != 0;
  return n;
}

std::string tile_id(int row0, int col0) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "tile_r%04d_c%04d", row0, col0);
  return buf;
}

EcoRegion majority_region(const Raster& ecomap, int row0, int col0, int size) {
  std::array<std::int64_t, 4> votes{};
  for (int r = row0; r < row0 + size; ++r)
    for (int c = col0; c < col0 + size; ++c)
      if (auto reg = region_from_code(ecomap.at(0, r, c))) ++votes[static_cast<int>(*reg)];
  int best = 0;
  for (int k = 1; k <= 3; ++k)
    if (votes[k] > votes[best]) best = k;
  return static_cast<EcoRegion>(best);
}

std::vector<LabeledTile> tile_dataset(const Raster& composite, const LabelGrid& labels, const Raster& ecomap,
                                      const TilingOptions& opts, TilingStats* stats) {
  const int T = opts.tile_size;
  if (T <= 0 || T % 32 != 0) throw_invalid("tile size must be a positive multiple of 32");
  if (opts.stride < 1) throw_invalid("tile stride must be >= 1");
  if (T > composite.width || T > composite.height) throw_invalid("tile size exceeds the raster extent");
  if (composite.bands != kImageBands) throw_invalid("composite must have 6 bands");
  if (labels.width != composite.width || labels.height != composite.height)
    throw_invalid("label grid does not match the composite");
  if (ecomap.width != composite.width || ecomap.height != composite.height)
    throw_invalid("eco-region map does not match the composite");

  const std::size_t plane = composite.plane();
  std::array<double, kImageBands> band_mean{};
  for (int b = 0; b < kImageBands; ++b) {
    double s = 0.0;
    std::int64_t n = 0;
    for (std::size_t p = 0; p < plane; ++p) {
      const float v = composite.data[b * plane + p];
      if (v == composite.nodata) continue;
      s += v;
      ++n;
    }
    band_mean[b] = n > 0 ? s / n : 0.0;
  }

  TilingStats st;
  std::vector<LabeledTile> tiles;
  for (int r0 = 0; r0 + T <= composite.height; r0 += opts.stride) {
    for (int c0 = 0; c0 + T <= composite.width; c0 += opts.stride) {
      ++st.scanned;
      std::int64_t missing = 0, labelled = 0;
      for (int r = r0; r < r0 + T; ++r)
        for (int c = c0; c < c0 + T; ++c) {
          bool nd = false;
          for (int b = 0; b < kImageBands && !nd; ++b) nd = composite.at(b, r, c) == composite.nodata;
          missing += nd;
          labelled += labels.valid[static_cast<std::size_t>(r) * labels.width + c] != 0;
        }
      if (static_cast<double>(missing) > opts.max_nodata_frac * T * T) {
        ++st.dropped_nodata;
        continue;
      }
      if (labelled == 0) {
        ++st.dropped_unlabeled;
        continue;
      }
      const EcoRegion region = majority_region(ecomap, r0, c0, T);
      if (region == EcoRegion::none) {
        ++st.dropped_no_region;
        continue;
      }
      LabeledTile t;
      t.id = tile_id(r0, c0);
      t.row0 = r0;
      t.col0 = c0;
      t.size = T;
      t.ecoregion = region;
      t.origin_x = composite.geotransform.origin_x + c0 * composite.geotransform.pixel_x;
      t.origin_y = composite.geotransform.origin_y + r0 * composite.geotransform.pixel_y;
      t.filled_pixels = missing;
      const std::size_t tp = static_cast<std::size_t>(T) * T;
      t.image.resize(kImageBands * tp);
      t.label.resize(tp);
      t.valid.resize(tp);
      for (int r = 0; r < T; ++r)
        for (int c = 0; c < T; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * T + c;
          for (int b = 0; b < kImageBands; ++b) {
            const float v = composite.at(b, r0 + r, c0 + c);
            t.image[b * tp + i] = v == composite.nodata ? static_cast<float>(band_mean[b]) : v;
          }
          const std::size_t g = static_cast<std::size_t>(r0 + r) * labels.width + c0 + c;
          t.valid[i] = labels.valid[g];
          t.label[i] = labels.valid[g] ? labels.label[g] : kNodata;
        }
      tiles.push_back(std::move(t));
    }
  }
  log::info("tiling kept ", tiles.size(), " of ", st.scanned, " windows (", st.dropped_nodata, " nodata, ",
            st.dropped_unlabeled, " unlabeled, ", st.dropped_no_region, " without region)");
  if (stats) *stats = st;
  return tiles;
}

BandStats compute_band_stats(const std::vector<const LabeledTile*>& tiles) {
  BandStats s;
  s.mean.assign(kImageBands, 0.0);
  s.std.assign(kImageBands, 1.0);
  if (tiles.empty()) return s;
  for (int b = 0; b < kImageBands; ++b) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (const auto* t : tiles) {
      const std::size_t tp = static_cast<std::size_t>(t->size) * t->size;
      for (std::size_t i = 0; i < tp; ++i) sum += t->image[b * tp + i];
      n += static_cast<std::int64_t>(tp);
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto* t : tiles) {
      const std::size_t tp = static_cast<std::size_t>(t->size) * t->size;
      for (std::size_t i = 0; i < tp; ++i) {
        const double d = t->image[b * tp + i] - mean;
        ss += d * d;
      }
    }
    double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 1e-12)) {
      log::warn("band ", b, " has zero spread; std forced to 1");
      sd = 1.0;
    }
    s.mean[b] = mean;
    s.std[b] = sd;
  }
  return s;
}

void normalize(LabeledTile& tile, const BandStats& stats) {
  if (stats.mean.size() != kImageBands || stats.std.size() != kImageBands)
    throw_invalid("band stats must have 6 entries");
  const std::size_t tp = static_cast<std::size_t>(tile.size) * tile.size;
  for (int b = 0; b < kImageBands; ++b)
    for (std::size_t i = 0; i < tp; ++i) {
      auto& v = tile.image[b * tp + i];
      v = static_cast<float>((v - stats.mean[b]) / stats.std[b]);
    }
}

}  // namespace agb::geo
