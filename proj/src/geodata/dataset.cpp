// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/geodata/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "agb/error.hpp"
#include "agb/geodata/labels.hpp"
#include "agb/log.hpp"
#include "agb/numcore/prng.hpp"
#include "json.hpp"

namespace agb::geo {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Split split) { return split == Split::finetune ? "finetune" : "validation"; }

std::int64_t DatasetManifest::count(Split split) const {
  return std::count_if(tiles.begin(), tiles.end(), [&](const ManifestEntry& e) { return e.split == split; });
}

DatasetManifest split_dataset(const std::vector<LabeledTile>& tiles, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw_invalid("validation fraction must lie in (0, 1)");
  DatasetManifest m;
  m.seed = seed;
  for (const auto& t : tiles) {
    if (std::any_of(m.tiles.begin(), m.tiles.end(), [&](const ManifestEntry& e) { return e.tile_id == t.id; }))
      throw_invalid("duplicate tile id " + t.id);
    m.tiles.push_back({t.id, "tiles/" + t.id, Split::finetune, t.ecoregion});
    m.tile_size = t.size;
  }
  std::sort(m.tiles.begin(), m.tiles.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.tile_id < b.tile_id; });
  const nc::Prng root(seed);
  for (EcoRegion region : kEcoRegions) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < m.tiles.size(); ++i)
      if (m.tiles[i].ecoregion == region) members.push_back(i);
    if (members.empty()) continue;
    if (members.size() < 2) {
      log::warn(to_string(region), " has fewer than 2 tiles; all kept in finetune");
      continue;
    }
    nc::Prng rng = root.fork(static_cast<std::uint64_t>(region));
    rng.shuffle(members.begin(), members.end());
    const auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size()) + 0.5));
    for (std::size_t k = 0; k < n_val && k < members.size(); ++k) m.tiles[members[k]].split = Split::validation;
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  json tiles = json::array();
  for (const auto& e : m.tiles)
    tiles.push_back({{"tile_id", e.tile_id}, {"path", e.path}, {"split", to_string(e.split)},
                     {"ecoregion", to_string(e.ecoregion)}});
  json doc = {{"format", "agb-manifest/1"},
              {"tiles", tiles},
              {"stats", {{"mean", m.stats.mean}, {"std", m.stats.std}}},
              {"seed", m.seed},
              {"tile_size", m.tile_size},
              {"band_names", m.band_names},
              {"config_hash", m.tags.config_hash}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw_data("E_IO", "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("E_IO", "cannot open manifest " + path.string());
  DatasetManifest m;
  try {
    json doc;
    in >> doc;
    for (const auto& t : doc.at("tiles")) {
      ManifestEntry e;
      e.tile_id = t.at("tile_id").get<std::string>();
      e.path = t.at("path").get<std::string>();
      const auto split = t.at("split").get<std::string>();
      if (split == "finetune") {
        e.split = Split::finetune;
      } else if (split == "validation") {
        e.split = Split::validation;
      } else {
        throw_data("E_PARSE", path.string() + ": unknown split '" + split + "'");
      }
      auto region = parse_ecoregion(t.at("ecoregion").get<std::string>());
      if (!region) throw_data("E_PARSE", path.string() + ": bad ecoregion for " + e.tile_id);
      e.ecoregion = *region;
      m.tiles.push_back(std::move(e));
    }
    m.stats.mean = doc.at("stats").at("mean").get<std::vector<double>>();
    m.stats.std = doc.at("stats").at("std").get<std::vector<double>>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.tile_size = doc.at("tile_size").get<int>();
    m.band_names = doc.value("band_names", std::vector<std::string>{});
    m.tags.config_hash = doc.value("config_hash", std::string{});
    m.tags.seed = m.seed;
  } catch (const json::exception& e) {
    throw_data("E_PARSE", path.string() + ": " + e.what());
  }
  return m;
}

void write_tile(const LabeledTile& t, const fs::path& base, const ArtifactTags& tags) {
  const int T = t.size;
  Raster r = Raster::make(T, T, kImageBands + 2);
  r.band_names = hls_band_names();
  r.band_names.push_back("agb");
  r.band_names.push_back("valid");
  r.geotransform.origin_x = t.origin_x;
  r.geotransform.origin_y = t.origin_y;
  r.tags = tags;
  const std::size_t tp = static_cast<std::size_t>(T) * T;
  std::copy(t.image.begin(), t.image.end(), r.data.begin());
  std::copy(t.label.begin(), t.label.end(), r.data.begin() + kImageBands * tp);
  for (std::size_t i = 0; i < tp; ++i) r.data[(kImageBands + 1) * tp + i] = t.valid[i] ? 1.0f : 0.0f;
  write_raster(r, base);
}

LabeledTile read_tile(const fs::path& base, const std::string& id, EcoRegion region) {
  const Raster r = read_raster(base);
  if (r.bands != kImageBands + 2 || r.width != r.height)
    throw_data("E_PARSE", base.string() + ": tile rasters need 8 bands on a square grid");
  LabeledTile t;
  t.id = id;
  t.size = r.width;
  std::sscanf(id.c_str(), "tile_r%d_c%d", &t.row0, &t.col0);
  t.ecoregion = region;
  t.origin_x = r.geotransform.origin_x;
  t.origin_y = r.geotransform.origin_y;
  const std::size_t tp = r.plane();
  t.image.assign(r.data.begin(), r.data.begin() + kImageBands * tp);
  t.label.assign(r.data.begin() + kImageBands * tp, r.data.begin() + (kImageBands + 1) * tp);
  t.valid.resize(tp);
  for (std::size_t i = 0; i < tp; ++i) t.valid[i] = r.data[(kImageBands + 1) * tp + i] != 0.0f;
  return t;
}

DatasetManifest build_dataset(const Raster& composite, const std::vector<PointMeasurement>& points_in,
                              const Raster& ecomap, const DatasetOptions& opts, const fs::path& out,
                              const ArtifactTags& tags) {
  auto points = filter_by_date(points_in, opts.date_from, opts.date_to);
  points = assign_ecoregions(std::move(points), ecomap);
  const LabelGrid labels = rasterize_labels(points, composite);
  require_labels(labels);
  std::vector<LabeledTile> tiles = tile_dataset(composite, labels, ecomap, opts.tiling);
  if (tiles.empty()) throw_data("E_EMPTY_SPLIT", "no tile survived the tiling filters");
  DatasetManifest m = split_dataset(tiles, opts.validation_fraction, opts.seed);
  m.tags = tags;
  m.tags.seed = opts.seed;
  m.band_names = composite.band_names;

  std::vector<const LabeledTile*> finetune;
  for (const auto& t : tiles) {
    auto it = std::find_if(m.tiles.begin(), m.tiles.end(), [&](const ManifestEntry& e) { return e.tile_id == t.id; });
    if (it->split == Split::finetune) finetune.push_back(&t);
  }
  m.stats = compute_band_stats(finetune);

  fs::create_directories(out / "tiles");
  for (const auto& t : tiles) write_tile(t, out / "tiles" / t.id, m.tags);
  write_manifest(m, out / "manifest.json");
  log::info("dataset: ", m.count(Split::finetune), " finetune and ", m.count(Split::validation),
            " validation tiles");
  return m;
}

std::vector<const LabeledTile*> Dataset::select(Split split, std::optional<EcoRegion> region) const {
  std::vector<const LabeledTile*> out;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto& e = manifest.tiles[i];
    if (e.split != split) continue;
    if (region && e.ecoregion != *region) continue;
    out.push_back(&tiles[i]);
  }
  return out;
}

Dataset load_dataset(const fs::path& where, bool normalized) {
  const fs::path manifest_path = fs::is_directory(where) ? where / "manifest.json" : where;
  const fs::path root = manifest_path.parent_path();
  Dataset ds;
  ds.manifest = read_manifest(manifest_path);
  ds.tiles.reserve(ds.manifest.tiles.size());
  for (const auto& e : ds.manifest.tiles) {
    LabeledTile t = read_tile(root / e.path, e.tile_id, e.ecoregion);
    if (normalized) normalize(t, ds.manifest.stats);
    ds.tiles.push_back(std::move(t));
  }
  return ds;
}

}  // namespace agb::geo
