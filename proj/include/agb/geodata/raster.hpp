// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agb/artifact.hpp"

namespace agb::geo {

inline constexpr float kNodata = -9999.0f;

/// Affine grid placement without rotation terms. Pixel (row, col) covers
/// x ∈ [ox + col·px, ox + (col+1)·px) and the analogous interval in y.
struct GeoTransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_x = 1.0;
  double pixel_y = -1.0;

  bool operator==(const GeoTransform&) const = default;
};

struct Raster {
  int width = 0;
  int height = 0;
  int bands = 0;
  std::vector<std::string> band_names;
  float nodata = kNodata;
  GeoTransform geotransform;
  int epsg = 4326;
  /// Band-major, then row-major: data[(b·height + row)·width + col].
  std::vector<float> data;
  ArtifactTags tags;

  static Raster make(int width, int height, int bands, float fill = 0.0f);

  std::size_t index(int band, int row, int col) const {
    return (static_cast<std::size_t>(band) * height + row) * width + col;
  }
  float at(int band, int row, int col) const { return data[index(band, row, col)]; }
  float& at(int band, int row, int col) { return data[index(band, row, col)]; }
  std::size_t plane() const { return static_cast<std::size_t>(width) * height; }

  bool same_grid(const Raster& other) const;
  /// Pixel containing a map coordinate, or nothing when it falls outside.
  std::optional<std::pair<int, int>> pixel_of(double x, double y) const;
  /// Map coordinate of a pixel center.
  std::pair<double, double> center_of(int row, int col) const;
};

/// Writes `<base>.bin` (little-endian f32) and the `<base>.json` sidecar.
void write_raster(const Raster& raster, const std::filesystem::path& base);
/// Reads a raster given either the base path or the path of its .bin/.json file.
Raster read_raster(const std::filesystem::path& base);

enum class MaskCode : std::uint8_t { clear = 0, cloud = 1, nodata = 2 };

struct Scene {
  Raster image;
  Raster cloud_mask;
  std::string date;
};

/// A scene directory holds `scenes.json` plus one image and one mask raster per date.
void write_scenes(const std::vector<Scene>& scenes, const std::filesystem::path& dir);
std::vector<Scene> read_scenes(const std::filesystem::path& dir);

const std::vector<std::string>& hls_band_names();

}  // namespace agb::geo
