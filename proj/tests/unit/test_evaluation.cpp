// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "agb/error.hpp"
#include "agb/evaluation/evaluation.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace agb;
using namespace agb::eval;

namespace {

template <typename F>
Error capture(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  return Error(ErrorKind::internal, "NONE", "no error");
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

/// Labels spread over every default bin, including exact edges.
float random_label(nc::Prng& rng) {
  static const float edges[] = {0, 50, 100, 200, 300, 400};
  if (rng.uniform() < 0.05) return edges[rng.below(6)];
  return static_cast<float>(rng.uniform(0.0, 500.0));
}

struct World {
  geo::Dataset data;
  std::vector<TilePrediction> preds;
};

/// `n` tiles cycling through the three regions; every fourth tile is in the
/// fine-tune split and must be ignored by the report.
World random_world(std::uint64_t seed, int n, int size = 8, double density = 0.3) {
  nc::Prng rng(seed);
  World w;
  for (int i = 0; i < n; ++i) {
    const auto region = geo::kEcoRegions[i % 3];
    geo::LabeledTile t;
    t.id = "t" + std::to_string(100 + i);
    t.size = size;
    t.ecoregion = region;
    const std::size_t plane = static_cast<std::size_t>(size * size);
    t.label.assign(plane, geo::kNodata);
    t.valid.assign(plane, 0);
    TilePrediction p{t.id, std::vector<float>(plane)};
    for (std::size_t k = 0; k < plane; ++k) {
      p.pred[k] = static_cast<float>(rng.uniform(0.0, 450.0));
      if (rng.uniform() < density) {
        t.valid[k] = 1;
        t.label[k] = random_label(rng);
      }
    }
    t.valid[0] = 1;
    t.label[0] = random_label(rng);
    w.data.manifest.tiles.push_back({t.id, t.id, i % 4 == 3 ? geo::Split::finetune : geo::Split::validation, region});
    w.data.tiles.push_back(std::move(t));
    w.preds.push_back(std::move(p));
  }
  return w;
}

EvalReport report_of(const World& w, const BinSpec& bins = {}) {
  return stratified_report(w.preds, w.data, bins, "gfm", "ds", ArtifactTags{"abc123", 7});
}

}  // namespace

TEST_CASE("bin spec") {
  const BinSpec b;
  CHECK(b.size() == 6);
  CHECK(b.find(0.0) == 0);
  CHECK(b.find(49.999) == 0);
  CHECK(b.find(50.0) == 1);
  CHECK(b.find(399.9) == 4);
  CHECK(b.find(400.0) == 5);
  CHECK(b.find(1e9) == 5);
  CHECK(b.find(-0.5) == -1);
  CHECK(std::isinf(b.hi(5)));
  CHECK(b.label(0) == "0-50");
  CHECK(b.label(5) == "400+");
  CHECK(BinSpec::parse("0,50,100,200,300,400").edges == b.edges);
  CHECK(BinSpec::parse("0,10,inf").edges == std::vector<double>{0, 10});
  CHECK(capture([] { BinSpec::parse("0,50,20"); }).kind() == ErrorKind::config);
  CHECK(capture([] { BinSpec::parse("5,10"); }).kind() == ErrorKind::config);
  CHECK(capture([] { BinSpec::parse("0,x"); }).kind() == ErrorKind::config);
}

TEST_CASE("binwise RMSE on two pixels") {
  const std::vector<float> pred{10, 60, 999}, label{7, 60, 5};
  const std::vector<std::uint8_t> valid{1, 1, 0};
  const Stratum s = binwise_rmse(pred, label, valid, BinSpec{});
  CHECK(s.n == 2);
  CHECK(*s.bins[0].rmse == 3.0);
  CHECK(*s.bins[1].rmse == 0.0);
  CHECK(*s.rmse == doctest::Approx(std::sqrt(4.5)).epsilon(1e-15));
  CHECK(s.bins[0].n == 1);
  for (std::size_t b = 2; b < s.bins.size(); ++b) {
    CHECK(s.bins[b].n == 0);
    CHECK_FALSE(s.bins[b].rmse.has_value());
  }

  const std::vector<std::uint8_t> none{0, 0, 0};
  const auto e = capture([&] { binwise_rmse(pred, label, none, BinSpec{}); });
  CHECK(e.code() == "E_EMPTY_LABELS");
  CHECK(e.kind() == ErrorKind::data);
  const std::vector<float> negative{-1, 60, 5};
  CHECK(capture([&] { binwise_rmse(pred, negative, valid, BinSpec{}); }).kind() == ErrorKind::invalid_argument);
}

TEST_CASE("binwise RMSE matches a brute-force oracle on 10000 pixels") {
  nc::Prng rng(2026);
  const std::size_t n = 10000;
  std::vector<float> pred(n), label(n);
  std::vector<std::uint8_t> valid(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = static_cast<float>(rng.uniform(0.0, 500.0));
    label[i] = random_label(rng);
    valid[i] = rng.uniform() < 0.7;
  }
  const BinSpec spec;
  const Stratum s = binwise_rmse(pred, label, valid, spec);
  const std::vector<double> pd(pred.begin(), pred.end()), ld(label.begin(), label.end());
  const auto ref = oracle::bin_pixels(pd, ld, valid, spec.edges);

  std::int64_t total_n = 0;
  double total_sse = 0.0;
  for (std::size_t b = 0; b < spec.size(); ++b) {
    CHECK(s.bins[b].n == ref[b].n);
    REQUIRE(ref[b].n > 0);
    const double want = std::sqrt(ref[b].sse / static_cast<double>(ref[b].n));
    CHECK(oracle::rel_diff(*s.bins[b].rmse, want) < 1e-6);
    total_n += ref[b].n;
    total_sse += ref[b].sse;
  }
  CHECK(s.n == total_n);
  CHECK(oracle::rel_diff(*s.rmse, std::sqrt(total_sse / static_cast<double>(total_n))) < 1e-6);

  // Pooled RMSE² equals the count-weighted mean of the per-bin RMSE².
  double weighted = 0.0;
  for (const auto& b : s.bins) weighted += static_cast<double>(b.n) * *b.rmse * *b.rmse;
  CHECK(oracle::rel_diff(*s.rmse * *s.rmse, weighted / static_cast<double>(s.n)) < 1e-9);
}

TEST_CASE("accumulators merge like a single pass") {
  nc::Prng rng(5);
  std::vector<float> pred(3000), label(3000);
  std::vector<std::uint8_t> valid(3000);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = static_cast<float>(rng.uniform(0, 400));
    label[i] = random_label(rng);
    valid[i] = rng.uniform() < 0.5;
  }
  BinAccumulator one{BinSpec{}}, a{BinSpec{}}, b{BinSpec{}};
  one.add(pred, label, valid);
  const std::span<const float> p(pred), l(label);
  const std::span<const std::uint8_t> v(valid);
  a.add(p.first(1234), l.first(1234), v.first(1234));
  b.add(p.subspan(1234), l.subspan(1234), v.subspan(1234));
  a.merge(b);
  const Stratum x = one.finish("x"), y = a.finish("x");
  CHECK(x.n == y.n);
  for (std::size_t k = 0; k < x.bins.size(); ++k)
    CHECK(oracle::rel_diff(*x.bins[k].rmse, *y.bins[k].rmse) < 1e-12);
  BinAccumulator other{BinSpec::parse("0,10")};
  CHECK(capture([&] { a.merge(other); }).kind() == ErrorKind::invalid_argument);
}

TEST_CASE("stratified report partitions the validation pixels by region") {
  const World w = random_world(11, 12);
  const EvalReport r = report_of(w);
  CHECK(r.model_id == "gfm");
  CHECK(r.tags.config_hash == "abc123");
  REQUIRE(r.regions.size() == 3);
  CHECK(r.regions[0].name == "EC1");
  CHECK(r.regions[1].name == "EC2");
  CHECK(r.regions[2].name == "EC3");
  CHECK(r.overall.name == "all");
  CHECK(r.stratum("EC2") == &r.regions[1]);
  CHECK(r.stratum("EC9") == nullptr);

  // Brute force over validation tiles only.
  std::vector<double> pd, ld;
  std::vector<std::uint8_t> vd;
  for (std::size_t i = 0; i < w.data.tiles.size(); ++i) {
    if (w.data.entry(i).split != geo::Split::validation) continue;
    const auto& t = w.data.tiles[i];
    pd.insert(pd.end(), w.preds[i].pred.begin(), w.preds[i].pred.end());
    ld.insert(ld.end(), t.label.begin(), t.label.end());
    vd.insert(vd.end(), t.valid.begin(), t.valid.end());
  }
  const auto ref = oracle::bin_pixels(pd, ld, vd, r.bins.edges);
  for (std::size_t b = 0; b < r.bins.size(); ++b) {
    CHECK(r.overall.bins[b].n == ref[b].n);
    std::int64_t n = 0;
    double sse = 0.0;
    for (const auto& s : r.regions) {
      n += s.bins[b].n;
      if (s.bins[b].rmse) sse += *s.bins[b].rmse * *s.bins[b].rmse * static_cast<double>(s.bins[b].n);
    }
    CHECK(n == r.overall.bins[b].n);
    if (n > 0) CHECK(oracle::rel_diff(sse, *r.overall.bins[b].rmse * *r.overall.bins[b].rmse * n) < 1e-9);
  }
  std::int64_t region_n = 0;
  for (const auto& s : r.regions) region_n += s.n;
  CHECK(region_n == r.overall.n);
}

TEST_CASE("stratified report does not depend on input order") {
  World w = random_world(12, 10);
  const EvalReport base = report_of(w);
  nc::Prng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    World shuffled = w;
    std::vector<std::size_t> perm(w.data.tiles.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.data.tiles[i] = w.data.tiles[perm[i]];
      shuffled.data.manifest.tiles[i] = w.data.manifest.tiles[perm[i]];
    }
    rng.shuffle(shuffled.preds.begin(), shuffled.preds.end());
    CHECK(report_of(shuffled) == base);
    CHECK(report_to_csv(report_of(shuffled)) == report_to_csv(base));
  }
}

TEST_CASE("reports ignore invalid pixels bit-exactly") {
  nc::Prng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    World w = random_world(1000 + static_cast<std::uint64_t>(trial), 6, 6, 0.4);
    const EvalReport base = report_of(w);
    for (std::size_t i = 0; i < w.data.tiles.size(); ++i) {
      auto& t = w.data.tiles[i];
      for (std::size_t k = 0; k < t.valid.size(); ++k) {
        if (t.valid[k]) continue;
        w.preds[i].pred[k] = static_cast<float>(rng.uniform(-1e6, 1e6));
        t.label[k] = trial % 2 ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(rng.uniform(-1e6, 1e6));
      }
    }
    const EvalReport moved = report_of(w);
    CHECK(moved == base);
    CHECK(report_to_csv(moved) == report_to_csv(base));
    CHECK(report_to_json(moved) == report_to_json(base));
  }
}

TEST_CASE("report errors") {
  World w = random_world(13, 6);
  World missing = w;
  missing.preds.erase(missing.preds.begin() + 1);
  auto e = capture([&] { report_of(missing); });
  CHECK(e.code() == "E_MISSING_PREDICTIONS");
  CHECK(std::string(e.what()).find("t101") != std::string::npos);

  // Predictions for fine-tune tiles are not required.
  World train_only_missing = w;
  train_only_missing.preds.erase(train_only_missing.preds.begin() + 3);
  CHECK_NOTHROW(report_of(train_only_missing));

  World no_val = w;
  for (auto& m : no_val.data.manifest.tiles) m.split = geo::Split::finetune;
  CHECK(capture([&] { report_of(no_val); }).code() == "E_EMPTY_SPLIT");

  World short_pred = w;
  short_pred.preds[0].pred.pop_back();
  CHECK(capture([&] { report_of(short_pred); }).kind() == ErrorKind::invalid_argument);

  const auto dir = oracle::temp_dir("eval_errors");
  CHECK(capture([&] { write_report(report_of(w), dir / "r", "pdf"); }).kind() == ErrorKind::invalid_argument);
  CHECK(capture([&] { read_report(dir / "absent.csv"); }).code() == "E_IO");
}

TEST_CASE("report CSV and JSON round trips") {
  World w = random_world(14, 5);
  // EC3 keeps only low labels so some of its bins are empty.
  for (std::size_t i = 0; i < w.data.tiles.size(); ++i)
    if (w.data.tiles[i].ecoregion == geo::EcoRegion::EC3)
      for (auto& l : w.data.tiles[i].label) l = std::min(l, 40.0f);
  const EvalReport r = report_of(w);
  const Stratum* ec3 = r.stratum("EC3");
  REQUIRE(ec3 != nullptr);
  CHECK_FALSE(ec3->bins[3].rmse.has_value());

  CHECK(report_from_csv(report_to_csv(r)) == r);
  CHECK(report_from_json(report_to_json(r)) == r);
  const auto csv = report_to_csv(r);
  CHECK(csv.find("# config_hash=abc123\n") != std::string::npos);
  CHECK(csv.find("# seed=7\n") != std::string::npos);
  CHECK(csv.find("\nstratum,bin_lo,bin_hi,n,rmse\n") != std::string::npos);
  CHECK(csv.find("\nEC3,300,400,0,\n") != std::string::npos);
  CHECK(csv.find(",400,inf,") != std::string::npos);
  const auto j = report_to_json(r);
  CHECK(j["overall"]["bins"][5]["hi"].is_null());
  CHECK(j["overall"]["bins"][5]["label"] == "400+");

  const auto dir = oracle::temp_dir("eval_roundtrip");
  write_report(r, dir / "rep", "csv");
  write_report(r, dir / "rep", "json");
  write_report(r, dir / "rep", "svg");
  CHECK(read_report(dir / "rep.csv") == r);
  CHECK(read_report(dir / "rep.json") == r);
  CHECK(std::filesystem::exists(dir / "rep.svg"));

  CHECK(capture([] { report_from_csv("nonsense\n1,2\n"); }).code() == "E_PARSE");
  CHECK(capture([] { report_from_csv("stratum,bin_lo,bin_hi,n,rmse\nall,,,3\n"); }).code() == "E_PARSE");
  CHECK(capture([] { report_from_json(nlohmann::json{{"model_id", 1}}); }).code() == "E_PARSE");
}

TEST_CASE("SVG chart has one panel per stratum and one bar per model") {
  World w = random_world(15, 9);
  for (std::size_t i = 0; i < w.data.tiles.size(); ++i)
    if (w.data.tiles[i].ecoregion == geo::EcoRegion::EC2)
      for (auto& l : w.data.tiles[i].label) l = std::min(l, 90.0f);
  EvalReport a = report_of(w);
  for (auto& p : w.preds)
    for (auto& v : p.pred) v *= 0.5f;
  EvalReport b = stratified_report(w.preds, w.data, BinSpec{}, "unet", "ds", ArtifactTags{"abc123", 7});
  const std::string svg = render_svg({a, b});

  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count_of(svg, "class=\"panel\"") == 4);
  for (const char* s : {"all", "EC1", "EC2", "EC3"})
    CHECK(count_of(svg, std::string("data-stratum=\"") + s + "\"") == 1);
  CHECK(count_of(svg, "class=\"bin-group\"") == 4 * 6);
  CHECK(count_of(svg, "data-bin=\"400+\"") == 4);

  std::size_t empty_bins = 0, filled = 0;
  for (const auto* r : {&a, &b})
    for (const char* s : {"all", "EC1", "EC2", "EC3"})
      for (const auto& bin : r->stratum(s)->bins) bin.rmse ? ++filled : ++empty_bins;
  CHECK(empty_bins >= 8);  // EC2 bins from 100 upward, for both models
  CHECK(count_of(svg, "class=\"bar\"") == filled);
  CHECK(count_of(svg, "class=\"empty\"") == empty_bins);
  CHECK(count_of(svg, ">n=0</text>") == empty_bins);
  CHECK(count_of(svg, "data-model=\"gfm\"") == 4 * 6);
  CHECK(count_of(svg, "data-model=\"unet\"") == 4 * 6);
  CHECK(count_of(svg, "class=\"legend\"") == 2);

  EvalReport other = b;
  other.bins = BinSpec::parse("0,10");
  CHECK(capture([&] { render_svg({a, other}); }).kind() == ErrorKind::invalid_argument);
  CHECK(capture([] { render_svg({}); }).kind() == ErrorKind::invalid_argument);
}
