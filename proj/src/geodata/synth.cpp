// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/geodata/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "agb/error.hpp"
#include "agb/numcore/prng.hpp"

namespace agb::geo {

namespace {

constexpr int kSynthBands = 6;
constexpr double kPixelDeg = 0.00027;
constexpr double kOriginLon = -60.0;
constexpr double kOriginLat = -5.0;

// Per-band intercept and slope against a saturating canopy index in [0, 1].
constexpr std::array<std::array<double, 2>, 6> kBandModel = {{
    {0.060, -0.035},  // blue
    {0.090, -0.040},  // green
    {0.110, -0.080},  // red
    {0.220, 0.180},   // nir_narrow
    {0.260, -0.120},  // swir1
    {0.190, -0.130},  // swir2
}};

Raster blank(const SynthConfig& cfg, int bands, float fill) {
  Raster r = Raster::make(cfg.width, cfg.height, bands, fill);
  r.geotransform = {kOriginLon, kOriginLat, kPixelDeg, -kPixelDeg};
  r.epsg = 4326;
  return r;
}

constexpr std::array<double, 3> kRegionScale = {1.0, 0.6, 0.35};

}  // namespace

double band_response(int band, double agb) {
  const double canopy = 1.0 - std::exp(-std::max(agb, 0.0) / 150.0);
  return kBandModel[static_cast<std::size_t>(band)][0] + kBandModel[static_cast<std::size_t>(band)][1] * canopy;
}

SynthWorld synth_generate(const SynthConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1 || cfg.n_scenes < 1 || cfg.n_points < 0 || cfg.n_ecoregions < 1 ||
      cfg.n_ecoregions > 3)
    throw_invalid("synth: grid, scene count, point count or eco-region count out of range");
  if (cfg.cloud_fraction < 0.0 || cfg.cloud_fraction >= 1.0 || cfg.nodata_fraction < 0.0 ||
      cfg.nodata_fraction >= 1.0)
    throw_invalid("synth: cloud and nodata fractions must lie in [0, 1)");
  const nc::Prng root(cfg.seed);
  const int W = cfg.width, H = cfg.height;
  const std::size_t plane = static_cast<std::size_t>(W) * H;
  SynthWorld w;

  // Eco-regions: wobbly vertical stripes, optional code-4 patch inside the last one.
  w.ecomap = blank(cfg, 1, 0.0f);
  w.ecomap.band_names = {"ecoregion"};
  {
    nc::Prng rng = root.fork(1);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = 0.04 * W;
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        const double x = c + amp * std::sin(2.0 * std::numbers::pi * 2.0 * r / H + phase);
        int code = 1 + static_cast<int>(std::floor(x * cfg.n_ecoregions / W));
        code = std::clamp(code, 1, cfg.n_ecoregions);
        w.ecomap.at(0, r, c) = static_cast<float>(code);
      }
    if (cfg.include_code4 && cfg.n_ecoregions == 3) {
      const int cr = H / 2, cc = W * 5 / 6, rad = std::max(2, W / 24);
      for (int r = std::max(0, cr - rad); r < std::min(H, cr + rad); ++r)
        for (int c = std::max(0, cc - rad); c < std::min(W, cc + rad); ++c)
          if (w.ecomap.at(0, r, c) == 3.0f) w.ecomap.at(0, r, c) = 4.0f;
    }
  }

  // AGB field: normalized bump sum, raised to a power for right skew, scaled per region.
  w.truth = blank(cfg, 1, 0.0f);
  w.truth.band_names = {"agb"};
  {
    nc::Prng rng = root.fork(2);
    struct Bump {
      double r, c, sigma, amp;
    };
    std::vector<Bump> bumps(static_cast<std::size_t>(cfg.n_bumps));
    for (auto& b : bumps) {
      b.r = rng.uniform(0.0, H);
      b.c = rng.uniform(0.0, W);
      b.sigma = rng.uniform(0.04, 0.12) * std::min(W, H);
      b.amp = rng.uniform(0.3, 1.0);
    }
    std::vector<double> field(plane, 0.0);
    double mx = 0.0;
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        double s = 0.0;
        for (const auto& b : bumps) {
          const double dr = r - b.r, dc = c - b.c;
          s += b.amp * std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
        }
        field[static_cast<std::size_t>(r) * W + c] = s;
        mx = std::max(mx, s);
      }
    for (std::size_t i = 0; i < plane; ++i) {
      const double u = mx > 0 ? field[i] / mx : 0.0;
      const auto region = region_from_code(w.ecomap.data[i]);
      const double scale = kRegionScale[static_cast<std::size_t>(region ? static_cast<int>(*region) - 1 : 0)];
      w.truth.data[i] = static_cast<float>(cfg.agb_peak * scale * std::pow(u, 1.5));
    }
  }

  // Scenes.
  for (int s = 0; s < cfg.n_scenes; ++s) {
    nc::Prng rng = root.fork(100 + static_cast<std::uint64_t>(s));
    Scene sc;
    sc.image = blank(cfg, kSynthBands, 0.0f);
    sc.image.band_names = hls_band_names();
    sc.cloud_mask = blank(cfg, 1, 0.0f);
    sc.cloud_mask.band_names = {"cloud_mask"};
    char date[32];
    std::snprintf(date, sizeof date, "2022-%02d-%02d", 6 + s / 28, 1 + s % 28);
    sc.date = date;
    const double gain = 1.0 + 0.01 * rng.normal();
    for (int b = 0; b < kSynthBands; ++b)
      for (std::size_t i = 0; i < plane; ++i)
        sc.image.data[b * plane + i] =
            static_cast<float>(gain * band_response(b, w.truth.data[i]) + cfg.band_noise * rng.normal());

    const auto target = static_cast<std::size_t>(cfg.cloud_fraction * static_cast<double>(plane));
    std::size_t covered = 0;
    while (covered < target) {
      const double cr = rng.uniform(0.0, H), cc = rng.uniform(0.0, W);
      const double rad = rng.uniform(0.03, 0.10) * std::min(W, H);
      const int r0 = std::max(0, static_cast<int>(cr - rad)), r1 = std::min(H - 1, static_cast<int>(cr + rad));
      const int c0 = std::max(0, static_cast<int>(cc - rad)), c1 = std::min(W - 1, static_cast<int>(cc + rad));
      for (int r = r0; r <= r1 && covered < target; ++r)
        for (int c = c0; c <= c1 && covered < target; ++c) {
          const double dr = r + 0.5 - cr, dc = c + 0.5 - cc;
          if (dr * dr + dc * dc > rad * rad) continue;
          float& m = sc.cloud_mask.at(0, r, c);
          if (m != 0.0f) continue;
          m = 1.0f;
          ++covered;
          for (int b = 0; b < kSynthBands; ++b) sc.image.at(b, r, c) = static_cast<float>(0.4 + 0.05 * rng.uniform());
        }
    }
    for (std::size_t i = 0; i < plane; ++i) {
      if (rng.uniform() >= cfg.nodata_fraction) continue;
      sc.cloud_mask.data[i] = 2.0f;
      for (int b = 0; b < kSynthBands; ++b) sc.image.data[b * plane + i] = kNodata;
    }
    w.scenes.push_back(std::move(sc));
  }

  // Point samples at random pixels, jittered inside the pixel.
  {
    nc::Prng rng = root.fork(3);
    w.points.reserve(static_cast<std::size_t>(cfg.n_points));
    for (int k = 0; k < cfg.n_points; ++k) {
      const int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(H)));
      const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(W)));
      PointMeasurement p;
      p.lon = kOriginLon + (c + rng.uniform(0.1, 0.9)) * kPixelDeg;
      p.lat = kOriginLat - (r + rng.uniform(0.1, 0.9)) * kPixelDeg;
      p.agb = std::max(0.0, static_cast<double>(w.truth.at(0, r, c)) + cfg.point_noise * rng.normal());
      char date[32];
      std::snprintf(date, sizeof date, "2022-%02d-%02d", 6 + static_cast<int>(rng.below(3)),
                    1 + static_cast<int>(rng.below(28)));
      p.date = date;
      p.ecoregion = region_from_code(w.ecomap.at(0, r, c));
      w.points.push_back(std::move(p));
    }
  }
  return w;
}

void write_synth(const SynthWorld& w, const std::filesystem::path& dir, const ArtifactTags& tags) {
  std::filesystem::create_directories(dir);
  std::vector<Scene> scenes = w.scenes;
  for (auto& s : scenes) {
    s.image.tags = tags;
    s.cloud_mask.tags = tags;
  }
  write_scenes(scenes, dir / "scenes");
  write_points_csv(w.points, dir / "points.csv");
  Raster eco = w.ecomap, truth = w.truth;
  eco.tags = tags;
  truth.tags = tags;
  write_raster(eco, dir / "ecomap");
  write_raster(truth, dir / "truth");
}

}  // namespace agb::geo
