// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agb/artifact.hpp"
#include "agb/geodata/points.hpp"
#include "agb/geodata/raster.hpp"
#include "agb/geodata/tiles.hpp"

namespace agb::geo {

enum class Split : std::uint8_t { finetune, validation };

std::string to_string(Split split);

struct ManifestEntry {
  std::string tile_id;
  std::string path;
  Split split = Split::finetune;
  EcoRegion ecoregion = EcoRegion::none;
};

struct DatasetManifest {
  std::vector<ManifestEntry> tiles;
  BandStats stats;
  std::uint64_t seed = 0;
  int tile_size = 0;
  std::vector<std::string> band_names;
  ArtifactTags tags;

  std::int64_t count(Split split) const;
};

/// Stratified hold-out: each eco-region's tiles are shuffled under the seed and
/// round-half-up(fraction·n) go to validation. Regions with fewer than 2 tiles
/// stay entirely in finetune. Stats are left empty.
DatasetManifest split_dataset(const std::vector<LabeledTile>& tiles, double validation_fraction,
                              std::uint64_t seed);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

struct DatasetOptions {
  TilingOptions tiling;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  std::string date_from;
  std::string date_to;
};

/// Full dataset build: eco-region assignment, rasterization, tiling, split,
/// finetune-only band stats, and on-disk tiles plus `manifest.json` under `out`.
DatasetManifest build_dataset(const Raster& composite, const std::vector<PointMeasurement>& points,
                              const Raster& ecomap, const DatasetOptions& opts, const std::filesystem::path& out,
                              const ArtifactTags& tags);

struct Dataset {
  DatasetManifest manifest;
  /// In manifest order; images normalized with the manifest stats.
  std::vector<LabeledTile> tiles;

  std::vector<const LabeledTile*> select(Split split, std::optional<EcoRegion> region = std::nullopt) const;
  const ManifestEntry& entry(std::size_t i) const { return manifest.tiles[i]; }
};

/// Loads a dataset directory (or a manifest path). Tiles are stored as raw
/// 8-band rasters: 6 image bands, agb, valid.
Dataset load_dataset(const std::filesystem::path& dir_or_manifest, bool normalized = true);

void write_tile(const LabeledTile& tile, const std::filesystem::path& base, const ArtifactTags& tags);
LabeledTile read_tile(const std::filesystem::path& base, const std::string& id, EcoRegion region);

}  // namespace agb::geo
