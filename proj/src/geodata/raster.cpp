// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/geodata/raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "agb/error.hpp"
#include "json.hpp"

namespace agb::geo {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& hls_band_names() {
  static const std::vector<std::string> names{"blue", "green", "red", "nir_narrow", "swir1", "swir2"};
  return names;
}

Raster Raster::make(int width, int height, int bands, float fill) {
  if (width <= 0 || height <= 0 || bands <= 0) throw_invalid("raster dimensions must be positive");
  Raster r;
  r.width = width;
  r.height = height;
  r.bands = bands;
  r.data.assign(static_cast<std::size_t>(width) * height * bands, fill);
  for (int b = 0; b < bands; ++b) r.band_names.push_back("band" + std::to_string(b + 1));
  return r;
}

bool Raster::same_grid(const Raster& o) const {
  return width == o.width && height == o.height && geotransform == o.geotransform && epsg == o.epsg;
}

std::optional<std::pair<int, int>> Raster::pixel_of(double x, double y) const {
  const auto& g = geotransform;
  if (g.pixel_x == 0.0 || g.pixel_y == 0.0) throw_invalid("geotransform is not invertible");
  const double fc = std::floor((x - g.origin_x) / g.pixel_x);
  const double fr = std::floor((y - g.origin_y) / g.pixel_y);
  if (!(fc >= 0 && fr >= 0 && fc < width && fr < height)) return std::nullopt;
  return std::pair<int, int>{static_cast<int>(fr), static_cast<int>(fc)};
}

std::pair<double, double> Raster::center_of(int row, int col) const {
  const auto& g = geotransform;
  return {g.origin_x + (col + 0.5) * g.pixel_x, g.origin_y + (row + 0.5) * g.pixel_y};
}

namespace {

fs::path strip(const fs::path& p) {
  if (p.extension() == ".bin" || p.extension() == ".json") {
    fs::path q = p;
    return q.replace_extension();
  }
  return p;
}

fs::path with_suffix(const fs::path& base, const char* ext) { return fs::path(base.string() + ext); }

}  // namespace

void write_raster(const Raster& r, const fs::path& base_in) {
  const fs::path base = strip(base_in);
  if (r.data.size() != static_cast<std::size_t>(r.width) * r.height * r.bands)
    throw_invalid("raster buffer size does not match its dimensions");
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  json meta = {{"width", r.width},
               {"height", r.height},
               {"bands", r.bands},
               {"band_names", r.band_names},
               {"nodata", r.nodata},
               {"geotransform",
                {r.geotransform.origin_x, r.geotransform.origin_y, r.geotransform.pixel_x, r.geotransform.pixel_y}},
               {"epsg", r.epsg},
               {"dtype", "float32"},
               {"byte_order", "little"}};
  if (!r.tags.empty()) {
    meta["config_hash"] = r.tags.config_hash;
    meta["seed"] = r.tags.seed;
  }
  {
    std::ofstream js(with_suffix(base, ".json"));
    if (!js) throw_data("E_IO", "cannot write " + with_suffix(base, ".json").string());
    js << meta.dump(2) << "\n";
  }
  std::ofstream bin(with_suffix(base, ".bin"), std::ios::binary);
  if (!bin) throw_data("E_IO", "cannot write " + with_suffix(base, ".bin").string());
  if constexpr (std::endian::native == std::endian::little) {
    bin.write(reinterpret_cast<const char*>(r.data.data()),
              static_cast<std::streamsize>(r.data.size() * sizeof(float)));
  } else {
    for (float v : r.data) {
      auto u = std::bit_cast<std::uint32_t>(v);
      u = __builtin_bswap32(u);
      bin.write(reinterpret_cast<const char*>(&u), 4);
    }
  }
  if (!bin) throw_data("E_IO", "short write to " + with_suffix(base, ".bin").string());
}

Raster read_raster(const fs::path& base_in) {
  const fs::path base = strip(base_in);
  const fs::path jpath = with_suffix(base, ".json");
  std::ifstream js(jpath);
  if (!js) throw_data("E_IO", "cannot open " + jpath.string());
  json meta;
  try {
    js >> meta;
  } catch (const json::exception& e) {
    throw_data("E_PARSE", jpath.string() + ": " + e.what());
  }
  Raster r;
  try {
    r.width = meta.at("width").get<int>();
    r.height = meta.at("height").get<int>();
    r.bands = meta.at("bands").get<int>();
    r.band_names = meta.value("band_names", std::vector<std::string>{});
    r.nodata = meta.value("nodata", kNodata);
    const auto gt = meta.at("geotransform").get<std::vector<double>>();
    if (gt.size() != 4) throw_data("E_PARSE", jpath.string() + ": geotransform needs 4 numbers");
    r.geotransform = {gt[0], gt[1], gt[2], gt[3]};
    r.epsg = meta.value("epsg", 4326);
    r.tags.config_hash = meta.value("config_hash", std::string{});
    r.tags.seed = meta.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw_data("E_PARSE", jpath.string() + ": " + e.what());
  }
  if (r.width <= 0 || r.height <= 0 || r.bands <= 0)
    throw_data("E_PARSE", jpath.string() + ": non-positive dimensions");
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.bands;
  r.data.resize(n);
  const fs::path bpath = with_suffix(base, ".bin");
  std::ifstream bin(bpath, std::ios::binary);
  if (!bin) throw_data("E_IO", "cannot open " + bpath.string());
  bin.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (bin.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
    throw_data("E_PARSE", bpath.string() + ": expected " + std::to_string(n) + " float32 values");
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : r.data) v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(v)));
  }
  return r;
}

void write_scenes(const std::vector<Scene>& scenes, const fs::path& dir) {
  fs::create_directories(dir);
  json index = json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%03zu", i);
    write_raster(scenes[i].image, dir / (std::string(stem) + "_image"));
    write_raster(scenes[i].cloud_mask, dir / (std::string(stem) + "_mask"));
    index.push_back({{"image", std::string(stem) + "_image"},
                     {"mask", std::string(stem) + "_mask"},
                     {"date", scenes[i].date}});
  }
  std::ofstream out(dir / "scenes.json");
  if (!out) throw_data("E_IO", "cannot write " + (dir / "scenes.json").string());
  out << json{{"scenes", index}}.dump(2) << "\n";
}

std::vector<Scene> read_scenes(const fs::path& dir) {
  std::ifstream in(dir / "scenes.json");
  if (!in) throw_data("E_IO", "missing scene index " + (dir / "scenes.json").string());
  json index;
  try {
    in >> index;
  } catch (const json::exception& e) {
    throw_data("E_PARSE", (dir / "scenes.json").string() + ": " + e.what());
  }
  std::vector<Scene> scenes;
  try {
    for (const auto& s : index.at("scenes")) {
      Scene sc;
      sc.image = read_raster(dir / s.at("image").get<std::string>());
      sc.cloud_mask = read_raster(dir / s.at("mask").get<std::string>());
      sc.date = s.value("date", std::string{});
      scenes.push_back(std::move(sc));
    }
  } catch (const json::exception& e) {
    throw_data("E_PARSE", (dir / "scenes.json").string() + ": " + e.what());
  }
  return scenes;
}

}  // namespace agb::geo
