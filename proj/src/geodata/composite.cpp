// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/geodata/composite.hpp"

#include <algorithm>

#include "agb/error.hpp"
#include "agb/parallel.hpp"

namespace agb::geo {

Raster median_composite(const std::vector<Scene>& scenes) {
  if (scenes.empty()) throw_invalid("median_composite: no scenes");
  const Raster& ref = scenes.front().image;
  for (const auto& s : scenes) {
    if (!s.image.same_grid(ref) || s.image.bands != ref.bands)
      throw_invalid("median_composite: scenes do not share one grid and band layout");
    if (s.image.band_names != ref.band_names) throw_invalid("median_composite: band order differs between scenes");
    if (s.cloud_mask.width != ref.width || s.cloud_mask.height != ref.height || s.cloud_mask.bands != 1)
      throw_invalid("median_composite: cloud mask does not match its image grid");
  }
  Raster out = ref;
  out.tags = {};
  out.nodata = kNodata;
  const std::size_t plane = ref.plane();
  const int bands = ref.bands;
  parallel_for(ref.height, [&](std::int64_t row) {
    std::vector<float> vals;
    vals.reserve(scenes.size());
    const std::size_t first = static_cast<std::size_t>(row) * ref.width;
    for (std::size_t p = first; p < first + static_cast<std::size_t>(ref.width); ++p) {
      for (int b = 0; b < bands; ++b) {
        vals.clear();
        for (const auto& s : scenes) {
          if (s.cloud_mask.data[p] != 0.0f) continue;
          const float v = s.image.data[b * plane + p];
          if (v == s.image.nodata) continue;
          vals.push_back(v);
        }
        float result = kNodata;
        if (!vals.empty()) {
          std::sort(vals.begin(), vals.end());
          const std::size_t n = vals.size();
          if (n % 2 == 1) {
            result = vals[n / 2];
          } else {
            result = static_cast<float>((static_cast<double>(vals[n / 2 - 1]) + vals[n / 2]) / 2.0);
          }
        }
        out.data[b * plane + p] = result;
      }
    }
  });
  return out;
}

}  // namespace agb::geo
