// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include <algorithm>
#include <cmath>
#include <map>
#include <fstream>
#include <functional>
#include <sstream>

#include "agb/error.hpp"
#include "agb/geodata/composite.hpp"
#include "agb/geodata/dataset.hpp"
#include "agb/geodata/labels.hpp"
#include "agb/geodata/synth.hpp"
#include "agb/geodata/tiles.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace agb;
using namespace agb::geo;

namespace {

Scene flat_scene(int w, int h, float value, float mask = 0.0f) {
  Scene s;
  s.image = Raster::make(w, h, 6, value);
  s.image.band_names = hls_band_names();
  s.cloud_mask = Raster::make(w, h, 1, mask);
  return s;
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

LabeledTile synthetic_tile(const std::string& id, EcoRegion region) {
  LabeledTile t;
  t.id = id;
  t.size = 32;
  t.ecoregion = region;
  t.image.assign(6 * 32 * 32, 0.0f);
  t.label.assign(32 * 32, kNodata);
  t.valid.assign(32 * 32, 0);
  t.valid[0] = 1;
  t.label[0] = 1.0f;
  return t;
}

}  // namespace

TEST_CASE("raster write/read is bit-exact") {
  auto dir = oracle::temp_dir("raster");
  nc::Prng rng(4);
  Raster r = Raster::make(7, 5, 3);
  for (auto& v : r.data) v = static_cast<float>(rng.normal());
  r.data[3] = kNodata;
  r.geotransform = {10.5, -3.25, 0.1, -0.2};
  r.epsg = 32633;
  r.tags = {"abc", 9};
  write_raster(r, dir / "x");
  Raster back = read_raster(dir / "x.bin");
  CHECK(back.data == r.data);
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.geotransform == r.geotransform);
  CHECK(back.epsg == 32633);
  CHECK(back.tags.config_hash == "abc");
  CHECK(back.tags.seed == 9);
  CHECK(error_code([&] { read_raster(dir / "missing"); }) == "E_IO");
}

TEST_CASE("pixel lookup follows the geotransform") {
  Raster r = Raster::make(4, 3, 1);
  r.geotransform = {100.0, 50.0, 2.0, -2.0};
  auto p = r.pixel_of(103.0, 47.0);
  REQUIRE(p);
  CHECK(p->first == 1);
  CHECK(p->second == 1);
  CHECK_FALSE(r.pixel_of(99.9, 49.0));
  CHECK_FALSE(r.pixel_of(101.0, 44.0));
  auto [x, y] = r.center_of(2, 3);
  CHECK(x == 107.0);
  CHECK(y == 45.0);
}

TEST_CASE("median composite examples") {
  Scene one = flat_scene(3, 2, 0.0f);
  for (std::size_t i = 0; i < one.image.data.size(); ++i) one.image.data[i] = static_cast<float>(i) * 0.5f;
  CHECK(median_composite({one}).data == one.image.data);

  std::vector<Scene> three{flat_scene(1, 1, 3.0f), flat_scene(1, 1, 7.0f), flat_scene(1, 1, 100.0f, 1.0f)};
  auto c = median_composite(three);
  for (float v : c.data) CHECK(v == 5.0f);

  std::vector<Scene> cloudy{flat_scene(2, 2, 1.0f, 1.0f), flat_scene(2, 2, 2.0f, 2.0f)};
  for (float v : median_composite(cloudy).data) CHECK(v == kNodata);

  CHECK(error_code([] { median_composite({}); }) == "E_INVALID_ARGUMENT");
  std::vector<Scene> mismatch{flat_scene(2, 2, 1.0f), flat_scene(3, 2, 1.0f)};
  CHECK(error_code([&] { median_composite(mismatch); }) == "E_INVALID_ARGUMENT");
}

TEST_CASE("median composite matches the pixel oracle and is order invariant") {
  nc::Prng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    auto scenes = oracle::random_stack(rng);
    auto c = median_composite(scenes);
    auto rev = scenes;
    std::reverse(rev.begin(), rev.end());
    CHECK(median_composite(rev).data == c.data);
    const Raster& g = scenes[0].image;
    for (int b = 0; b < 6; ++b)
      for (int r = 0; r < g.height; ++r)
        for (int col = 0; col < g.width; ++col) {
          const float got = c.at(b, r, col);
          REQUIRE(got == oracle::pixel_median(scenes, b, r, col));
          if (got == kNodata) continue;
          float lo = 1e30f, hi = -1e30f;
          for (const auto& s : scenes)
            if (s.cloud_mask.at(0, r, col) == 0.0f && s.image.at(b, r, col) != kNodata) {
              lo = std::min(lo, s.image.at(b, r, col));
              hi = std::max(hi, s.image.at(b, r, col));
            }
          CHECK((got >= lo && got <= hi));
        }
  }
}

TEST_CASE("points csv parsing") {
  std::istringstream in("lon,lat,agb_mgha,date,ecoregion\n-55.1,-12.3,142.5,2022-06-01,1\n");
  auto pts = parse_points_csv(in);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].lon == -55.1);
  CHECK(pts[0].lat == -12.3);
  CHECK(pts[0].agb == 142.5);
  CHECK(pts[0].date == "2022-06-01");
  CHECK(pts[0].ecoregion == EcoRegion::EC1);

  std::istringstream neg("lon,lat,agb_mgha,date\n1,2,3,2022-01-01\n1,2,-4,2022-01-01\n");
  try {
    parse_points_csv(neg);
    FAIL("negative agb accepted");
  } catch (const Error& e) {
    CHECK(e.code() == "E_PARSE");
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream bad_header("x,y\n");
  CHECK(error_code([&] { parse_points_csv(bad_header); }) == "E_PARSE");
  std::istringstream short_row("lon,lat,agb_mgha,date\n1,2\n");
  CHECK(error_code([&] { parse_points_csv(short_row); }) == "E_PARSE");

  auto dir = oracle::temp_dir("points");
  std::vector<PointMeasurement> src{{1.25, -2.5, 10.0, "2022-06-02", EcoRegion::EC2},
                                    {3.0, 4.0, 0.0, "2022-07-01", std::nullopt}};
  write_points_csv(src, dir / "p.csv");
  auto back = read_points_csv(dir / "p.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].lon == 1.25);
  CHECK(back[0].ecoregion == EcoRegion::EC2);
  CHECK_FALSE(back[1].ecoregion);
}

TEST_CASE("eco-region assignment") {
  Raster eco = Raster::make(4, 1, 1);
  eco.data = {1, 2, 3, 4};
  auto at = [&](int col) { return PointMeasurement{col + 0.5, -0.5, 1.0, "", std::nullopt}; };
  CHECK(assign_ecoregion(at(0), eco) == EcoRegion::EC1);
  CHECK(assign_ecoregion(at(1), eco) == EcoRegion::EC2);
  CHECK(assign_ecoregion(at(2), eco) == EcoRegion::EC3);
  CHECK(assign_ecoregion(at(3), eco) == EcoRegion::EC3);
  CHECK_FALSE(assign_ecoregion(at(4), eco));
  eco.data[0] = 7;
  CHECK_FALSE(assign_ecoregion(at(0), eco));
  std::int64_t excluded = 0;
  auto kept = assign_ecoregions({at(0), at(1), at(5)}, eco, &excluded);
  CHECK(kept.size() == 1);
  CHECK(excluded == 2);
}

TEST_CASE("label rasterization") {
  Raster grid = Raster::make(8, 8, 1);
  grid.geotransform = {0.0, 8.0, 1.0, -1.0};
  auto single = rasterize_labels({{2.5, 5.5, 120.0, "", {}}}, grid);
  CHECK(single.inside == 1);
  for (int i = 0; i < 64; ++i) {
    if (i == 2 * 8 + 2) {
      CHECK(single.valid[i] == 1);
      CHECK(single.label[i] == 120.0f);
    } else {
      CHECK(single.valid[i] == 0);
      CHECK(single.label[i] == kNodata);
    }
  }
  auto twice = rasterize_labels({{0.2, 7.9, 100.0, "", {}}, {0.7, 7.1, 200.0, "", {}}, {-1, 3, 5, "", {}}}, grid);
  CHECK(twice.label[0] == 150.0f);
  CHECK(twice.outside == 1);
  auto none = rasterize_labels({}, grid);
  CHECK(error_code([&] { require_labels(none); }) == "E_EMPTY_LABELS");
}

TEST_CASE("label rasterization matches a binning oracle") {
  Raster grid = Raster::make(64, 64, 1);
  grid.geotransform = {-50.0, 10.0, 0.01, -0.01};
  nc::Prng rng(77);
  std::vector<PointMeasurement> pts;
  for (int i = 0; i < 1000; ++i) {
    PointMeasurement p;
    p.lon = -50.0 + rng.uniform(-0.05, 0.69);
    p.lat = 10.0 - rng.uniform(-0.05, 0.69);
    p.agb = rng.uniform(0.0, 400.0);
    pts.push_back(p);
  }
  // Duplicate a few pixels on purpose.
  for (int i = 0; i < 50; ++i) pts.push_back(pts[static_cast<std::size_t>(i)]);
  auto g = rasterize_labels(pts, grid);
  std::map<std::pair<long, long>, std::pair<double, int>> bins;
  double total_in = 0.0;
  std::int64_t outside = 0;
  for (const auto& p : pts) {
    const long c = static_cast<long>(std::floor((p.lon + 50.0) / 0.01));
    const long r = static_cast<long>(std::floor((p.lat - 10.0) / -0.01));
    if (c < 0 || r < 0 || c >= 64 || r >= 64) {
      ++outside;
      continue;
    }
    bins[{r, c}].first += p.agb;
    bins[{r, c}].second += 1;
    total_in += p.agb;
  }
  CHECK(g.outside == outside);
  std::int64_t valid = 0;
  double mass = 0.0;
  for (int i = 0; i < 64 * 64; ++i) {
    valid += g.valid[i];
    if (g.valid[i]) mass += static_cast<double>(g.label[i]) * g.count[i];
  }
  CHECK(valid == static_cast<std::int64_t>(bins.size()));
  for (const auto& [rc, sc] : bins) {
    const int i = static_cast<int>(rc.first * 64 + rc.second);
    CHECK(g.valid[i] == 1);
    CHECK(g.label[i] == static_cast<float>(sc.first / sc.second));
    CHECK(g.count[i] == sc.second);
  }
  CHECK(oracle::rel_diff(mass, total_in) < 1e-6);
}

TEST_CASE("tiling") {
  Raster comp = Raster::make(64, 64, 6, 0.1f);
  Raster eco = Raster::make(64, 64, 1, 2.0f);
  LabelGrid labels;
  labels.width = labels.height = 64;
  labels.label.assign(64 * 64, kNodata);
  labels.valid.assign(64 * 64, 0);
  TilingOptions opts;
  CHECK(tile_dataset(comp, labels, eco, opts).empty());
  labels.valid[100] = 1;
  labels.label[100] = 42.0f;
  auto tiles = tile_dataset(comp, labels, eco, opts);
  REQUIRE(tiles.size() == 1);
  CHECK(tiles[0].id == "tile_r0000_c0000");
  CHECK(tiles[0].ecoregion == EcoRegion::EC2);
  CHECK(tiles[0].label[100] == 42.0f);
  CHECK(tiles[0].valid_count() == 1);

  comp.at(3, 5, 5) = kNodata;
  comp.at(0, 7, 9) = 0.3f;
  auto filled = tile_dataset(comp, labels, eco, opts);
  CHECK(filled[0].filled_pixels == 1);
  double mean = 0.0;
  int n = 0;
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c)
      if (comp.at(3, r, c) != kNodata) mean += comp.at(3, r, c), ++n;
  CHECK(filled[0].image[3 * 4096 + 5 * 64 + 5] == static_cast<float>(mean / n));

  opts.tile_size = 48;
  CHECK(error_code([&] { tile_dataset(comp, labels, eco, opts); }) == "E_INVALID_ARGUMENT");
  opts.tile_size = 96;
  CHECK(error_code([&] { tile_dataset(comp, labels, eco, opts); }) == "E_INVALID_ARGUMENT");
}

TEST_CASE("majority eco-region ties go to the lower id") {
  Raster eco = Raster::make(2, 2, 1);
  eco.data = {2, 3, 3, 2};
  CHECK(majority_region(eco, 0, 0, 2) == EcoRegion::EC2);
  eco.data = {4, 3, 1, 0};
  CHECK(majority_region(eco, 0, 0, 2) == EcoRegion::EC3);
  eco.data = {0, 0, 9, 0};
  CHECK(majority_region(eco, 0, 0, 2) == EcoRegion::none);
}

TEST_CASE("synthetic world tiling matches a window scan") {
  SynthConfig cfg;
  cfg.seed = 5;
  auto world = synth_generate(cfg);
  auto comp = median_composite(world.scenes);
  auto labels = rasterize_labels(world.points, comp);
  TilingOptions opts{64, 64, 0.5};
  auto tiles = tile_dataset(comp, labels, world.ecomap, opts);
  int expected = 0;
  for (int r0 = 0; r0 + 64 <= 256; r0 += 64)
    for (int c0 = 0; c0 + 64 <= 256; c0 += 64) {
      int nd = 0, lab = 0, eco = 0;
      for (int r = r0; r < r0 + 64; ++r)
        for (int c = c0; c < c0 + 64; ++c) {
          bool any = false;
          for (int b = 0; b < 6; ++b) any = any || comp.at(b, r, c) == kNodata;
          nd += any;
          lab += labels.valid[r * 256 + c];
          const float code = world.ecomap.at(0, r, c);
          eco += code >= 1 && code <= 4;
        }
      if (nd <= 0.5 * 64 * 64 && lab > 0 && eco > 0) ++expected;
    }
  CHECK(static_cast<int>(tiles.size()) == expected);
  CHECK(expected > 0);
}

TEST_CASE("normalization") {
  LabeledTile t = synthetic_tile("a", EcoRegion::EC1);
  for (std::size_t i = 0; i < t.image.size(); ++i) t.image[i] = static_cast<float>(i % 5);
  for (std::size_t i = 0; i < 1024; ++i) t.image[i] = 3.5f;  // constant band 0
  auto stats = compute_band_stats({&t});
  CHECK(stats.std[0] == 1.0);
  LabeledTile id = t;
  normalize(id, BandStats{std::vector<double>(6, 0.0), std::vector<double>(6, 1.0)});
  CHECK(id.image == t.image);
  normalize(t, stats);
  for (std::size_t i = 0; i < 1024; ++i) CHECK(t.image[i] == 0.0f);

  nc::Prng rng(8);
  std::vector<LabeledTile> tiles(3, synthetic_tile("b", EcoRegion::EC1));
  for (auto& tile : tiles)
    for (std::size_t i = 0; i < tile.image.size(); ++i) tile.image[i] = static_cast<float>(0.1 * (i / 1024 + 1) * rng.normal() + 0.2);
  std::vector<const LabeledTile*> ptrs{&tiles[0], &tiles[1], &tiles[2]};
  auto s = compute_band_stats(ptrs);
  for (auto& tile : tiles) normalize(tile, s);
  auto post = compute_band_stats(ptrs);
  for (int b = 0; b < 6; ++b) {
    CHECK(std::abs(post.mean[b]) < 1e-5);
    CHECK(std::abs(post.std[b] - 1.0) < 1e-5);
  }
}

TEST_CASE("stratified split") {
  std::vector<LabeledTile> tiles;
  for (int i = 0; i < 10; ++i) tiles.push_back(synthetic_tile(tile_id(i, 0), EcoRegion::EC1));
  auto m = split_dataset(tiles, 0.2, 3);
  CHECK(m.count(Split::validation) == 2);
  CHECK(m.count(Split::finetune) == 8);
  auto m2 = split_dataset(tiles, 0.2, 3);
  for (std::size_t i = 0; i < m.tiles.size(); ++i) CHECK(m.tiles[i].split == m2.tiles[i].split);
  CHECK(error_code([&] { split_dataset(tiles, 1.0, 3); }) == "E_INVALID_ARGUMENT");

  std::vector<LabeledTile> lone{synthetic_tile("x", EcoRegion::EC2)};
  CHECK(split_dataset(lone, 0.5, 1).count(Split::validation) == 0);

  nc::Prng rng(12);
  std::vector<LabeledTile> many;
  std::map<EcoRegion, int> per;
  for (int i = 0; i < 100; ++i) {
    auto region = kEcoRegions[rng.below(3)];
    many.push_back(synthetic_tile(tile_id(i, 1), region));
    ++per[region];
  }
  for (double frac : {0.1, 0.25, 0.3}) {
    auto sm = split_dataset(many, frac, 99);
    for (EcoRegion region : kEcoRegions) {
      int val = 0, total = 0;
      for (const auto& e : sm.tiles)
        if (e.ecoregion == region) total++, val += e.split == Split::validation;
      CHECK(total == per[region]);
      const int expected = total < 2 ? 0 : static_cast<int>(std::floor(frac * total + 0.5));
      CHECK(val == expected);
      CHECK(std::abs(val - frac * total) <= 0.5);
    }
  }
}

TEST_CASE("synthetic world properties") {
  SynthConfig cfg;
  cfg.width = cfg.height = 64;
  cfg.cloud_fraction = 0.0;
  cfg.nodata_fraction = 0.0;
  cfg.n_scenes = 4;
  cfg.seed = 21;
  auto world = synth_generate(cfg);
  auto comp = median_composite(world.scenes);
  for (int b = 0; b < 6; ++b)
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        std::vector<double> v;
        for (const auto& s : world.scenes) v.push_back(s.image.at(b, r, c));
        std::sort(v.begin(), v.end());
        CHECK(comp.at(b, r, c) == static_cast<float>((v[1] + v[2]) / 2.0));
      }

  SynthConfig big;
  big.seed = 1;
  auto w2 = synth_generate(big);
  int below = 0;
  for (const auto& p : w2.points) {
    below += p.agb < 200.0;
    CHECK(p.agb >= 0.0);
  }
  CHECK(below >= 0.6 * w2.points.size());
  auto w3 = synth_generate(big);
  CHECK(w3.truth.data == w2.truth.data);
  CHECK(w3.scenes[2].image.data == w2.scenes[2].image.data);

  double cloudy = 0;
  for (float m : w2.scenes[0].cloud_mask.data) cloudy += m == 1.0f;
  CHECK(cloudy / w2.scenes[0].cloud_mask.data.size() == doctest::Approx(0.3).epsilon(0.05));

  SynthConfig empty = big;
  empty.n_points = 0;
  auto w4 = synth_generate(empty);
  auto dir = oracle::temp_dir("synth_empty");
  CHECK(error_code([&] {
          build_dataset(median_composite(w4.scenes), w4.points, w4.ecomap, DatasetOptions{}, dir, {});
        }) == "E_EMPTY_LABELS");
}

TEST_CASE("dataset build and reload") {
  SynthConfig cfg;
  cfg.seed = 3;
  auto world = synth_generate(cfg);
  auto comp = median_composite(world.scenes);
  auto dir = oracle::temp_dir("dataset");
  DatasetOptions opts;
  opts.seed = 11;
  auto m = build_dataset(comp, world.points, world.ecomap, opts, dir, {"hash1", 11});
  auto ds = load_dataset(dir);
  CHECK(ds.manifest.tiles.size() == m.tiles.size());
  CHECK(ds.manifest.tags.config_hash == "hash1");
  CHECK(ds.manifest.stats.mean == m.stats.mean);
  auto raw = load_dataset(dir / "manifest.json", false);
  auto ft = raw.select(Split::finetune);
  auto st = compute_band_stats(ft);
  for (int b = 0; b < 6; ++b) CHECK(st.mean[b] == m.stats.mean[b]);
  for (std::size_t i = 0; i < ds.tiles.size(); ++i) {
    CHECK(ds.tiles[i].id == ds.manifest.tiles[i].tile_id);
    CHECK(ds.tiles[i].valid_count() > 0);
    CHECK(ds.tiles[i].ecoregion == ds.manifest.tiles[i].ecoregion);
  }
  auto dir2 = oracle::temp_dir("dataset2");
  build_dataset(comp, world.points, world.ecomap, opts, dir2, {"hash1", 11});
  std::ifstream a(dir / "manifest.json"), b(dir2 / "manifest.json");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}
