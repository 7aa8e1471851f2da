// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/geodata/points.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "agb/error.hpp"
#include "agb/log.hpp"

namespace agb::geo {

std::string to_string(EcoRegion region) {
  switch (region) {
    case EcoRegion::EC1: return "EC1";
    case EcoRegion::EC2: return "EC2";
    case EcoRegion::EC3: return "EC3";
    case EcoRegion::none: break;
  }
  return "none";
}

std::optional<EcoRegion> region_from_code(double code) {
  if (code == 1.0) return EcoRegion::EC1;
  if (code == 2.0) return EcoRegion::EC2;
  if (code == 3.0 || code == 4.0) return EcoRegion::EC3;
  return std::nullopt;
}

std::optional<EcoRegion> parse_ecoregion(const std::string& text) {
  if (text == "EC1") return EcoRegion::EC1;
  if (text == "EC2") return EcoRegion::EC2;
  if (text == "EC3" || text == "EC4") return EcoRegion::EC3;
  int code = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), code);
  if (ec != std::errc() || p != text.data() + text.size()) return std::nullopt;
  return region_from_code(code);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  }
  return out;
}

double parse_number(const std::string& s, int line, const char* field) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw_data("E_PARSE", "points line " + std::to_string(line) + ": bad " + field + " '" + s + "'");
  return v;
}

}  // namespace

std::vector<PointMeasurement> parse_points_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw_data("E_PARSE", "points line 1: missing header");
  const auto header = split_csv(line);
  const bool has_eco = header.size() == 5 && header[4] == "ecoregion";
  if (header.size() < 4 || header[0] != "lon" || header[1] != "lat" || header[2] != "agb_mgha" ||
      header[3] != "date" || (header.size() == 5 && !has_eco) || header.size() > 5)
    throw_data("E_PARSE", "points line 1: expected header lon,lat,agb_mgha,date[,ecoregion]");
  std::vector<PointMeasurement> points;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw_data("E_PARSE", "points line " + std::to_string(lineno) + ": expected " +
                                std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    PointMeasurement p;
    p.lon = parse_number(f[0], lineno, "lon");
    p.lat = parse_number(f[1], lineno, "lat");
    p.agb = parse_number(f[2], lineno, "agb_mgha");
    p.date = f[3];
    if (!std::isfinite(p.agb) || p.agb < 0)
      throw_data("E_PARSE", "points line " + std::to_string(lineno) + ": agb must be finite and >= 0");
    if (!(p.lon >= -180 && p.lon <= 180 && p.lat >= -90 && p.lat <= 90))
      throw_data("E_PARSE", "points line " + std::to_string(lineno) + ": lon/lat out of range");
    if (has_eco && !f[4].empty()) {
      p.ecoregion = parse_ecoregion(f[4]);
      if (!p.ecoregion)
        throw_data("E_PARSE", "points line " + std::to_string(lineno) + ": unknown ecoregion '" + f[4] + "'");
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<PointMeasurement> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("E_IO", "cannot open " + path.string());
  return parse_points_csv(in);
}

void write_points_csv(const std::vector<PointMeasurement>& points, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw_data("E_IO", "cannot write " + path.string());
  out << "lon,lat,agb_mgha,date,ecoregion\n";
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", p.lon, p.lat, p.agb);
    out << buf << p.date << ',';
    if (p.ecoregion) out << static_cast<int>(*p.ecoregion);
    out << '\n';
  }
}

std::optional<EcoRegion> assign_ecoregion(const PointMeasurement& point, const Raster& ecomap) {
  const auto px = ecomap.pixel_of(point.lon, point.lat);
  if (!px) return std::nullopt;
  return region_from_code(ecomap.at(0, px->first, px->second));
}

std::vector<PointMeasurement> assign_ecoregions(std::vector<PointMeasurement> points, const Raster& ecomap,
                                                std::int64_t* excluded) {
  std::vector<PointMeasurement> kept;
  kept.reserve(points.size());
  std::int64_t dropped = 0;
  for (auto& p : points) {
    if (!p.ecoregion) p.ecoregion = assign_ecoregion(p, ecomap);
    if (p.ecoregion) {
      kept.push_back(std::move(p));
    } else {
      ++dropped;
    }
  }
  if (dropped > 0) log::info("excluded ", dropped, " points without an eco-region");
  if (excluded) *excluded = dropped;
  return kept;
}

std::vector<PointMeasurement> filter_by_date(const std::vector<PointMeasurement>& points, const std::string& from,
                                             const std::string& to) {
  std::vector<PointMeasurement> out;
  for (const auto& p : points) {
    if (!from.empty() && p.date < from) continue;
    if (!to.empty() && p.date > to) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace agb::geo
