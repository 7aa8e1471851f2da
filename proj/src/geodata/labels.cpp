// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/geodata/labels.hpp"

#include "agb/error.hpp"
#include "agb/log.hpp"

namespace agb::geo {

LabelGrid rasterize_labels(const std::vector<PointMeasurement>& points, const Raster& grid) {
  LabelGrid g;
  g.width = grid.width;
  g.height = grid.height;
  const std::size_t n = grid.plane();
  std::vector<double> sums(n, 0.0);
  g.count.assign(n, 0);
  for (const auto& p : points) {
    const auto px = grid.pixel_of(p.lon, p.lat);
    if (!px) {
      ++g.outside;
      continue;
    }
    const std::size_t i = static_cast<std::size_t>(px->first) * grid.width + px->second;
    sums[i] += p.agb;
    ++g.count[i];
    ++g.inside;
  }
  g.label.assign(n, kNodata);
  g.valid.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.count[i] == 0) continue;
    g.label[i] = static_cast<float>(sums[i] / g.count[i]);
    g.valid[i] = 1;
  }
  if (g.outside > 0) log::info(g.outside, " points fall outside the label grid");
  return g;
}

void require_labels(const LabelGrid& labels) {
  if (labels.empty()) throw_data("E_EMPTY_LABELS", "no point measurement falls inside the grid");
}

}  // namespace agb::geo
