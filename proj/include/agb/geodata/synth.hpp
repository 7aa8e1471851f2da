// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agb/artifact.hpp"
#include "agb/geodata/points.hpp"
#include "agb/geodata/raster.hpp"

namespace agb::geo {

struct SynthConfig {
  int width = 256;
  int height = 256;
  int n_scenes = 6;
  double cloud_fraction = 0.3;
  /// Fraction of pixels per scene flagged nodata in both image and mask.
  double nodata_fraction = 0.02;
  int n_points = 3000;
  int n_ecoregions = 3;
  /// Gaussian bumps in the AGB field.
  int n_bumps = 40;
  /// Peak AGB in Mg/ha for the densest eco-region.
  double agb_peak = 350.0;
  double point_noise = 2.0;
  double band_noise = 0.005;
  /// Adds a small patch of raw eco code 4 inside the EC3 stripe.
  bool include_code4 = true;
  std::uint64_t seed = 0;
};

struct SynthWorld {
  std::vector<Scene> scenes;
  std::vector<PointMeasurement> points;
  Raster ecomap;
  Raster truth;
};

/// Deterministic toy world: a skewed smooth AGB field over vertical eco-region
/// stripes, six bands that are monotone functions of AGB plus noise, cloud
/// blobs per scene, and noisy point samples of the field.
SynthWorld synth_generate(const SynthConfig& cfg);

/// Writes `scenes/`, `points.csv`, `ecomap.{bin,json}` and `truth.{bin,json}`.
void write_synth(const SynthWorld& world, const std::filesystem::path& dir, const ArtifactTags& tags);

/// Noise-free reflectance for one band at a given AGB.
double band_response(int band, double agb);

}  // namespace agb::geo
