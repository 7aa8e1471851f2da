// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "agb/geodata/raster.hpp"

namespace agb::geo {

enum class EcoRegion : std::uint8_t { none = 0, EC1 = 1, EC2 = 2, EC3 = 3 };

inline constexpr EcoRegion kEcoRegions[] = {EcoRegion::EC1, EcoRegion::EC2, EcoRegion::EC3};

std::string to_string(EcoRegion region);
/// Accepts "EC1".."EC3" or a raw map code 1..4 (4 folds into EC3).
std::optional<EcoRegion> parse_ecoregion(const std::string& text);
/// Raw eco-map code to region; codes outside 1..4 yield nothing.
std::optional<EcoRegion> region_from_code(double code);

struct PointMeasurement {
  double lon = 0.0;
  double lat = 0.0;
  double agb = 0.0;
  std::string date;
  std::optional<EcoRegion> ecoregion;
};

/// Header `lon,lat,agb_mgha,date[,ecoregion]`. Violations throw a data error
/// naming the 1-based line.
std::vector<PointMeasurement> parse_points_csv(std::istream& in);
std::vector<PointMeasurement> read_points_csv(const std::filesystem::path& path);
void write_points_csv(const std::vector<PointMeasurement>& points, const std::filesystem::path& path);

/// Region under the point, or nothing when it lies off the map or on an unknown code.
std::optional<EcoRegion> assign_ecoregion(const PointMeasurement& point, const Raster& ecomap);

/// Fills missing eco-regions from the map and drops points that stay unassigned.
std::vector<PointMeasurement> assign_ecoregions(std::vector<PointMeasurement> points, const Raster& ecomap,
                                                std::int64_t* excluded = nullptr);

/// Keeps points whose ISO date lies in [from, to]; empty bounds are open.
std::vector<PointMeasurement> filter_by_date(const std::vector<PointMeasurement>& points,
                                             const std::string& from, const std::string& to);

}  // namespace agb::geo
