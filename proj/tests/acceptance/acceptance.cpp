// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Criteria 8 to 10 share one synthetic world and one pre-trained encoder.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "agb/error.hpp"
#include "agb/evaluation/evaluation.hpp"
#include "agb/geodata/composite.hpp"
#include "agb/geodata/dataset.hpp"
#include "agb/geodata/synth.hpp"
#include "agb/log.hpp"
#include "agb/models/checkpoint.hpp"
#include "agb/models/gradcheck.hpp"
#include "agb/models/model.hpp"
#include "agb/numcore/gradcheck.hpp"
#include "agb/numcore/ops.hpp"
#include "agb/pipeline/pipeline.hpp"
#include "agb/training/training.hpp"
#include "support/oracles.hpp"

#ifndef AGB_CLI_PATH
#error "AGB_CLI_PATH must name the agb executable"
#endif
#ifndef AGB_QUICKSTART_CONFIG
#error "AGB_QUICKSTART_CONFIG must name configs/quickstart.json"
#endif

namespace fs = std::filesystem;
using namespace agb;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int g_failed = 0;

void criterion(int id, const std::string& title, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  if (!v.pass) ++g_failed;
  std::printf("%s criterion %d: %s (%.1fs)%s%s\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), since(t0),
              v.detail.empty() ? "" : " | ", v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

/// Population SD of the valid labels.
double label_sd(const std::vector<const geo::LabeledTile*>& tiles) {
  double sum = 0.0, sq = 0.0;
  std::int64_t n = 0;
  for (const auto* t : tiles)
    for (std::size_t i = 0; i < t->label.size(); ++i)
      if (t->valid[i]) {
        sum += t->label[i];
        ++n;
      }
  const double mean = sum / static_cast<double>(n);
  for (const auto* t : tiles)
    for (std::size_t i = 0; i < t->label.size(); ++i)
      if (t->valid[i]) sq += (t->label[i] - mean) * (t->label[i] - mean);
  return std::sqrt(sq / static_cast<double>(n));
}

double min_val_loss(const training::TrainHistory& h) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : h.records) m = std::min(m, r.val_loss.value_or(m));
  return m;
}

/// The shared synthetic world: 512x256 pixels cut into 32 tiles of 64.
struct World {
  fs::path root;
  fs::path data;
  fs::path encoder;
  geo::Dataset dataset;
  std::vector<const geo::LabeledTile*> all;
  models::ModelConfig cfg = models::ModelConfig::toy();
  training::TrainHistory pretrain_history;
  std::optional<models::ModelBundle> simmim;
};

World& world() {
  static World w = [] {
    World out;
    out.root = oracle::temp_dir("acceptance_world");
    out.data = out.root / "data";
    out.encoder = out.root / "encoder.ckpt";
    geo::SynthConfig sc;
    sc.seed = 1;
    sc.width = 512;
    sc.height = 256;
    sc.n_points = 6000;
    const auto synth = geo::synth_generate(sc);
    const auto composite = geo::median_composite(synth.scenes);
    geo::DatasetOptions opts;
    opts.seed = 1;
    opts.validation_fraction = 0.2;
    geo::build_dataset(composite, synth.points, synth.ecomap, opts, out.data, {});
    out.dataset = geo::load_dataset(out.data);
    for (const auto& t : out.dataset.tiles) out.all.push_back(&t);
    return out;
  }();
  return w;
}

/// 50 SimMIM epochs over every tile of the world; saved for criteria 8 and 10.
void pretrain_world() {
  World& w = world();
  if (w.simmim) return;
  w.simmim = models::make_model(models::ModelKind::simmim, w.cfg, 1);
  training::PretrainConfig pc;
  pc.epochs = 50;
  pc.seed = 1;
  w.pretrain_history = training::train_pretrain(*w.simmim, w.all, pc).history;
  models::CheckpointMeta meta{models::ModelKind::simmim, w.cfg, "", 1, pc.epochs, json::object()};
  models::save_checkpoint(w.encoder, meta, *w.simmim->store);
}

// ---------------------------------------------------------------------------

Verdict parameter_counts() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto cfg = models::ModelConfig::paper();
  auto gfm = models::make_model(models::ModelKind::gfm, cfg, 0, nc::DType::f32, true);
  models::freeze_encoder(*gfm.store);
  auto unet = models::make_model(models::ModelKind::unet, cfg, 0, nc::DType::f32, true);
  const auto head = models::count_params(*gfm.store, true);
  const auto un = models::count_params(*unet.store, true);
  const double ratio = static_cast<double>(un) / static_cast<double>(head);
  const double secs = since(t0);
  v.require(head >= 500000 && head <= 700000, "decoder count out of [0.5e6, 0.7e6]");
  v.require(un >= 7000000 && un <= 8600000, "U-Net count out of [7.0e6, 8.6e6]");
  v.require(ratio >= 10.0, "ratio below 10");
  v.require(secs < 1.0, "counting took longer than 1 s");
  v.detail += (v.detail.empty() ? "" : "; ") + std::to_string(head) + " decoder vs " + std::to_string(un) +
              " U-Net params, ratio " + fmt("%.2f", ratio) + ", " + fmt("%.3fs", secs);
  return v;
}

Verdict schedule() {
  Verdict v;
  const auto t0 = Clock::now();
  const training::ScheduleConfig cfg{100, 2e-4, 10};
  v.require(training::lr_schedule(9, cfg) == 2e-4, "lr(9) != 2e-4");
  v.require(training::lr_schedule(10, cfg) == 2e-4, "lr(10) != 2e-4");
  for (int e = 1; e < 10; ++e)
    v.require(training::lr_schedule(e, cfg) > training::lr_schedule(e - 1, cfg), "warmup not increasing");
  for (int e = 11; e < 100; ++e)
    v.require(training::lr_schedule(e, cfg) < training::lr_schedule(e - 1, cfg), "cosine tail not decreasing");
  const double last = training::lr_schedule(99, cfg);
  v.require(last < 2e-6, "lr(99) >= 2e-6");
  v.require(since(t0) < 1.0, "schedule took longer than 1 s");
  v.detail += (v.detail.empty() ? "" : "; ") + fmt("lr(99) = %.3e", last);
  return v;
}

Verdict gradient_suite() {
  Verdict v;
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checks = 0;
  auto take = [&](const std::string& name, std::uint64_t seed, const nc::GradCheckReport& r) {
    ++checks;
    worst = std::max(worst, r.max_rel_error);
    v.require(r.passed && r.max_rel_error < 1e-4, name + " seed " + std::to_string(seed) + " failed");
  };
  for (const auto& name : nc::primitive_check_names())
    for (std::uint64_t seed = 0; seed < 10; ++seed) take(name, seed, nc::run_primitive_check(name, seed));
  for (const auto& name : models::model_check_names())
    for (std::uint64_t seed = 0; seed < 10; ++seed) take(name, seed, models::run_model_check(name, seed));
  const double secs = since(t0);
  v.require(secs < 300.0, "suite took longer than 5 min");
  v.detail += (v.detail.empty() ? "" : "; ") + std::to_string(nc::primitive_check_names().size()) +
              " primitives + " + std::to_string(models::model_check_names().size()) + " models x 10 seeds, " +
              fmt("max rel error %.2e", worst);
  return v;
}

Verdict sparse_contract() {
  Verdict v;
  nc::Prng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int size = 4 + static_cast<int>(rng.below(12));
    std::vector<geo::LabeledTile> tiles;
    geo::Dataset ds;
    std::vector<eval::TilePrediction> preds;
    for (int i = 0; i < 3; ++i) {
      auto t = oracle::random_tile(rng, size, rng.uniform(0.05, 0.6), "t" + std::to_string(i),
                                   geo::kEcoRegions[static_cast<std::size_t>(i)]);
      for (auto& l : t.label)
        if (l != geo::kNodata) l = std::abs(l) * 50.0f;
      eval::TilePrediction p{t.id, std::vector<float>(t.label.size())};
      for (auto& x : p.pred) x = static_cast<float>(rng.uniform(0.0, 450.0));
      ds.manifest.tiles.push_back({t.id, t.id, geo::Split::validation, t.ecoregion});
      preds.push_back(std::move(p));
      ds.tiles.push_back(std::move(t));
    }
    auto run = [&](const geo::Dataset& d, const std::vector<eval::TilePrediction>& pr) {
      std::vector<double> pv, lv;
      std::vector<std::uint8_t> valid;
      for (std::size_t i = 0; i < d.tiles.size(); ++i) {
        pv.insert(pv.end(), pr[i].pred.begin(), pr[i].pred.end());
        lv.insert(lv.end(), d.tiles[i].label.begin(), d.tiles[i].label.end());
        valid.insert(valid.end(), d.tiles[i].valid.begin(), d.tiles[i].valid.end());
      }
      const auto n = static_cast<std::int64_t>(pv.size());
      nc::Tensor pred = nc::Tensor::from({n}, pv, nc::DType::f32).set_requires_grad(true);
      nc::Tensor label = nc::Tensor::from({n}, lv, nc::DType::f32).set_requires_grad(true);
      nc::Tensor loss = training::masked_rmse_loss(pred, label, valid);
      nc::backward(loss);
      const auto report = eval::stratified_report(pr, d, eval::BinSpec{}, "gfm", "ds", ArtifactTags{"h", 1});
      return std::make_tuple(loss.item(), pred.grad().to_vector(), label.grad().to_vector(), report,
                             eval::report_to_csv(report), eval::report_to_json(report).dump());
    };
    const auto base = run(ds, preds);
    for (std::size_t i = 0; i < ds.tiles.size(); ++i)
      for (std::size_t k = 0; k < ds.tiles[i].valid.size(); ++k) {
        if (ds.tiles[i].valid[k]) continue;
        preds[i].pred[k] = static_cast<float>(rng.uniform(-1e6, 1e6));
        ds.tiles[i].label[k] =
            trial % 2 ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(rng.uniform(-1e6, 1e6));
      }
    const auto moved = run(ds, preds);
    const std::string t = "trial " + std::to_string(trial);
    v.require(std::get<0>(base) == std::get<0>(moved), t + ": loss changed");
    v.require(std::get<1>(base) == std::get<1>(moved), t + ": prediction gradient changed");
    v.require(std::get<2>(base) == std::get<2>(moved), t + ": label gradient changed");
    v.require(std::get<3>(base) == std::get<3>(moved), t + ": report changed");
    v.require(std::get<4>(base) == std::get<4>(moved) && std::get<5>(base) == std::get<5>(moved),
              t + ": serialized report changed");
  }
  if (v.pass) v.detail = "100 trials, loss, both gradients and every report field bit-identical";
  return v;
}

Verdict frozen_encoder() {
  Verdict v;
  nc::Prng rng(3);
  std::vector<geo::LabeledTile> tiles;
  for (int i = 0; i < 4; ++i) tiles.push_back(oracle::random_tile(rng, 64, 0.1, "tile_" + std::to_string(i)));
  const auto ptrs = oracle::pointers(tiles);
  auto m = models::make_model(models::ModelKind::gfm, models::ModelConfig::toy(), 5);
  const auto enc = m.store->checksum(models::Component::encoder);
  std::vector<std::vector<double>> before;
  for (const auto& e : m.store->entries())
    if (e.component == models::Component::decoder) before.push_back(e.value.to_vector());
  training::FinetuneConfig fc;
  fc.epochs = 20;
  fc.batch_size = 2;
  training::train_finetune(m, {ptrs[0], ptrs[1], ptrs[2]}, {ptrs[3]}, fc);
  v.require(m.store->checksum(models::Component::encoder) == enc, "encoder checksum changed");
  std::int64_t changed = 0, total = 0;
  std::size_t k = 0;
  for (const auto& e : m.store->entries()) {
    if (e.component != models::Component::decoder) continue;
    const auto now = e.value.to_vector();
    for (std::size_t i = 0; i < now.size(); ++i) changed += now[i] != before[k][i] ? 1 : 0;
    total += static_cast<std::int64_t>(now.size());
    ++k;
  }
  const double frac = static_cast<double>(changed) / static_cast<double>(total);
  v.require(frac >= 0.99, "fewer than 99% of decoder parameters changed");
  v.detail += (v.detail.empty() ? "" : "; ") + std::to_string(changed) + "/" + std::to_string(total) +
              " decoder parameters changed (" + fmt("%.2f%%", 100.0 * frac) + "), encoder checksum unchanged";
  return v;
}

Verdict composite_oracle() {
  Verdict v;
  nc::Prng rng(6);
  std::int64_t pixels = 0, even = 0, odd = 0, all_cloudy = 0;
  auto check_stack = [&](const std::vector<geo::Scene>& scenes) {
    const auto c = geo::median_composite(scenes);
    const auto& g = scenes[0].image;
    for (int r = 0; r < g.height; ++r)
      for (int col = 0; col < g.width; ++col) {
        int clear = 0;
        for (const auto& s : scenes) clear += s.cloud_mask.at(0, r, col) == 0.0f ? 1 : 0;
        if (clear == 0) ++all_cloudy;
        for (int b = 0; b < 6; ++b) {
          ++pixels;
          int n = 0;
          for (const auto& s : scenes)
            n += s.cloud_mask.at(0, r, col) == 0.0f && s.image.at(b, r, col) != geo::kNodata ? 1 : 0;
          if (n > 0) (n % 2 ? odd : even) += 1;
          const float got = c.at(b, r, col), want = oracle::pixel_median(scenes, b, r, col);
          if (!(got == want)) {
            v.require(false, "mismatch at band " + std::to_string(b) + " pixel " + std::to_string(r) + "," +
                                 std::to_string(col));
            return;
          }
        }
      }
  };
  for (int s = 0; s < 100 && v.pass; ++s) check_stack(oracle::random_stack(rng));
  v.require(even > 0, "no even-count pixel exercised");
  v.require(odd > 0, "no odd-count pixel exercised");
  v.require(all_cloudy > 0, "no all-cloudy pixel exercised");
  v.detail += (v.detail.empty() ? "" : "; ") + std::string("100 stacks, ") + std::to_string(pixels) +
              " band-pixels exact (" + std::to_string(even) + " even-count, " + std::to_string(all_cloudy) +
              " all-cloudy pixels)";
  return v;
}

Verdict evaluation_oracle() {
  Verdict v;
  nc::Prng rng(2027);
  const std::size_t n = 10000;
  static const float edges[] = {0, 50, 100, 200, 300, 400};
  std::vector<float> pred(n), label(n);
  std::vector<std::uint8_t> valid(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = static_cast<float>(rng.uniform(0.0, 500.0));
    label[i] = rng.uniform() < 0.05 ? edges[rng.below(6)] : static_cast<float>(rng.uniform(0.0, 500.0));
  }
  const eval::BinSpec spec;
  const auto s = eval::binwise_rmse(pred, label, valid, spec);
  const std::vector<double> pd(pred.begin(), pred.end()), ld(label.begin(), label.end());
  const auto ref = oracle::bin_pixels(pd, ld, valid, spec.edges);
  double worst = 0.0;
  for (std::size_t b = 0; b < spec.size(); ++b) {
    v.require(s.bins[b].n == ref[b].n, "bin " + std::to_string(b) + " count differs");
    if (ref[b].n == 0) continue;
    const double err = oracle::rel_diff(*s.bins[b].rmse, std::sqrt(ref[b].sse / static_cast<double>(ref[b].n)));
    worst = std::max(worst, err);
    v.require(err < 1e-6, "bin " + std::to_string(b) + " RMSE off by more than 1e-6 relative");
  }
  double weighted = 0.0;
  for (const auto& b : s.bins)
    if (b.rmse) weighted += static_cast<double>(b.n) * *b.rmse * *b.rmse;
  const double pooled = oracle::rel_diff(*s.rmse * *s.rmse, weighted / static_cast<double>(s.n));
  v.require(pooled < 1e-9, "pooled identity off by more than 1e-9 relative");
  v.detail += (v.detail.empty() ? "" : "; ") + fmt2("max bin rel error %.2e, pooled identity error %.2e", worst, pooled);
  return v;
}

Verdict pretraining() {
  Verdict v;
  World& w = world();
  v.require(w.all.size() == 32, "world has " + std::to_string(w.all.size()) + " tiles, expected 32");
  pretrain_world();
  const auto& rec = w.pretrain_history.records;
  const double ratio = rec.back().train_loss / rec.front().train_loss;
  v.require(rec.size() == 50, "expected 50 epochs");
  v.require(ratio < 0.5, "final loss not below half of epoch 0");

  // Gradient of the reconstruction loss with respect to the target.
  std::vector<std::size_t> picks{0, 1, 2, 3};
  auto batch = training::make_batch(w.all, picks);
  nc::Prng rng(11);
  const int grid = w.all[0]->size / w.cfg.simmim.mask_patch_size;
  std::vector<models::PatchMask> masks;
  for (std::size_t i = 0; i < picks.size(); ++i)
    masks.push_back(models::random_patch_mask(grid, grid, w.cfg.simmim.mask_ratio, rng));
  nc::Tensor target = batch.image.detach().set_requires_grad(true);
  nc::backward(w.simmim->simmim->forward(batch.image, masks, target).loss);
  const auto mask = w.simmim->simmim->pixel_mask(masks, 6, w.all[0]->size, w.all[0]->size);
  const auto g = target.grad().to_vector();
  std::int64_t unmasked = 0, unmasked_nonzero = 0, masked_nonzero = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask[i]) {
      masked_nonzero += g[i] != 0.0 ? 1 : 0;
    } else {
      ++unmasked;
      unmasked_nonzero += g[i] != 0.0 ? 1 : 0;
    }
  }
  v.require(unmasked > 0 && unmasked_nonzero == 0, "nonzero gradient on an unmasked target pixel");
  v.require(masked_nonzero > 0, "masked target pixels received no gradient");
  v.detail += (v.detail.empty() ? "" : "; ") +
              fmt2("loss %.4f -> %.4f", rec.front().train_loss, rec.back().train_loss) + fmt(", ratio %.3f", ratio) +
              ", " + std::to_string(unmasked) + " unmasked target entries with zero gradient";
  return v;
}

Verdict overfit() {
  Verdict v;
  World& w = world();
  pretrain_world();
  const std::vector<const geo::LabeledTile*> eight(w.all.begin(), w.all.begin() + 8);
  const double sd = label_sd(eight);

  auto t0 = Clock::now();
  const auto ckpt = models::read_checkpoint(w.encoder);
  auto gfm = models::make_model(models::ModelKind::gfm, w.cfg, 1);
  models::load_params(ckpt, *gfm.store, "encoder.");
  training::FinetuneConfig fc;
  fc.epochs = 200;
  fc.batch_size = 1;
  fc.max_lr = 2e-3;
  fc.seed = 1;
  const double gfm_min = min_val_loss(training::train_finetune(gfm, eight, eight, fc).history);
  const double gfm_secs = since(t0);

  t0 = Clock::now();
  auto unet = models::make_model(models::ModelKind::unet, w.cfg, 1);
  training::BaselineConfig bc;
  bc.epochs = 200;
  bc.batch_size = 4;
  bc.lr = 1e-3;
  bc.seed = 1;
  const double unet_min = min_val_loss(training::train_baseline(unet, eight, eight, bc).history);
  const double unet_secs = since(t0);

  v.require(gfm_min < 0.1 * sd, "GFM train RMSE did not reach 10% of label SD");
  v.require(unet_min < 0.1 * sd, "U-Net train RMSE did not reach 10% of label SD");
  v.require(gfm_secs < 600.0 && unet_secs < 600.0, "a model took longer than 10 min");
  v.detail += (v.detail.empty() ? "" : "; ") + fmt("label SD %.2f, ", sd) +
              fmt2("GFM %.3f SD in %.0fs, ", gfm_min / sd, gfm_secs) +
              fmt2("U-Net %.3f SD in %.0fs", unet_min / sd, unet_secs);
  return v;
}

Verdict transfer_report() {
  Verdict v;
  World& w = world();
  pretrain_world();
  pipeline::RunConfig cfg;
  cfg.seed = 1;
  cfg.finetune.epochs = 40;
  cfg.finetune.warmup_epochs = 4;
  cfg.finetune.batch_size = 2;
  cfg.finetune.max_lr = 1e-3;
  cfg.baseline.epochs = 40;
  cfg.baseline.batch_size = 4;
  cfg.baseline.lr = 1e-3;
  cfg.eval.formats = {"csv", "json"};
  const fs::path out = w.root / "transfer";
  fs::create_directories(out);

  std::string spec;
  for (auto r : geo::kEcoRegions) {
    const std::string name = geo::to_string(r);
    std::int64_t fine = 0, val = 0;
    for (const auto& e : w.dataset.manifest.tiles)
      if (e.ecoregion == r) (e.split == geo::Split::validation ? val : fine) += 1;
    v.require(fine > 0 && val > 0, name + " lacks a fine-tune or validation tile");
    const fs::path ck = out / ("gfm_" + name + ".ckpt");
    pipeline::run_finetune(cfg, w.encoder, w.data, ck, r);
    v.require(models::read_checkpoint(ck).meta.extra.value("region", "") == name, name + " checkpoint region tag");
    spec += (spec.empty() ? "" : ",") + name + "=" + ck.string();
  }
  pipeline::run_train_unet(cfg, w.data, out / "unet.ckpt");

  pipeline::EvaluateOptions gopts;
  gopts.name = "gfm";
  const auto g = pipeline::run_evaluate(cfg, pipeline::ModelSpec::parse(spec), w.data, out / "gfm", gopts);
  pipeline::EvaluateOptions uopts;
  uopts.name = "unet";
  const auto u = pipeline::run_evaluate(cfg, pipeline::ModelSpec::parse((out / "unet.ckpt").string()), w.data,
                                        out / "unet", uopts);
  pipeline::run_report({out / "gfm.csv", out / "unet.json"}, out / "figure.svg");
  const std::string svg = slurp(out / "figure.svg");

  std::size_t filled = 0, empty = 0;
  for (const auto* rep : {&g, &u})
    for (const char* s : {"all", "EC1", "EC2", "EC3"}) {
      const auto* st = rep->stratum(s);
      if (!st) {
        v.require(false, rep->model_id + " report lacks stratum " + s);
        continue;
      }
      v.require(st->n > 0 && st->rmse && std::isfinite(*st->rmse), rep->model_id + " " + s + " total RMSE missing");
      for (const auto& b : st->bins) {
        const bool populated = b.rmse.has_value() && std::isfinite(*b.rmse);
        v.require(populated == (b.n > 0), rep->model_id + " " + s + " bin population mismatch");
        populated ? ++filled : ++empty;
      }
    }
  const std::size_t bins = g.bins.size();
  v.require(count_of(svg, "class=\"panel\"") == 4, "expected 4 panels");
  for (const char* s : {"all", "EC1", "EC2", "EC3"})
    v.require(count_of(svg, std::string("data-stratum=\"") + s + "\"") == 1, std::string("panel ") + s);
  v.require(count_of(svg, "class=\"bin-group\"") == 4 * bins, "bin-group count");
  v.require(count_of(svg, "data-model=\"gfm\"") == 4 * bins, "gfm bar slots");
  v.require(count_of(svg, "data-model=\"unet\"") == 4 * bins, "unet bar slots");
  v.require(count_of(svg, "class=\"bar\"") == filled, "bar count differs from non-empty bins");
  v.require(count_of(svg, "class=\"empty\"") == empty, "empty marker count");
  v.detail += (v.detail.empty() ? "" : "; ") + std::string("4 panels, ") + std::to_string(filled) +
              " populated bars, " + std::to_string(empty) + " empty bins marked" +
              fmt2(", overall RMSE gfm %.2f unet %.2f", *g.overall.rmse, *u.overall.rmse);
  return v;
}

/// Runs the CLI in `dir`; returns the exit status.
int agb_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(AGB_CLI_PATH) + "' -q --config '" +
                          std::string(AGB_QUICKSTART_CONFIG) + "' " + args + " >>log.txt 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

/// File contents with the wall-time column of training histories removed.
std::string comparable(const fs::path& p) {
  const std::string name = p.filename().string();
  const auto ends = [&](const std::string& s) {
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  std::string text = slurp(p);
  if (ends(".history.json")) {
    json j = json::parse(text);
    for (auto& r : j["records"]) r.erase("seconds");
    return j.dump();
  }
  if (ends(".history.csv")) {
    std::stringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  }
  return text;
}

Verdict determinism() {
  Verdict v;
  const fs::path base = oracle::temp_dir("acceptance_quickstart");
  const std::vector<std::string> chain{
      "synth",
      "composite",
      "build-dataset",
      "pretrain",
      "finetune",
      "train-unet",
      "evaluate --model run/gfm.ckpt --name GFM --format csv,json,svg",
      "evaluate --model run/unet.ckpt --name U-Net --format csv,json,svg",
      "report --inputs run/reports/GFM.csv,run/reports/U-Net.csv --out run/figure.svg"};
  double worst = 0.0;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = base / run;
    fs::create_directories(dir);
    const auto t0 = Clock::now();
    for (const auto& step : chain) {
      const int st = agb_cli(dir, step);
      if (st != 0) {
        v.require(false, std::string("run ") + run + ": '" + step + "' exited " + std::to_string(st));
        return v;
      }
    }
    worst = std::max(worst, since(t0));
  }
  v.require(worst < 1800.0, "a run took longer than 30 min");

  std::size_t files = 0;
  std::int64_t bytes = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "a" / "run")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), base / "a");
    const fs::path other = base / "b" / rel;
    ++files;
    bytes += static_cast<std::int64_t>(e.file_size());
    if (!fs::exists(other)) {
      v.require(false, rel.string() + " missing in second run");
      continue;
    }
    v.require(comparable(e.path()) == comparable(other), rel.string() + " differs");
  }
  std::size_t files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(base / "b" / "run")) files_b += e.is_regular_file() ? 1 : 0;
  v.require(files_b == files, "second run wrote a different file set");
  for (const char* must : {"run/data/manifest.json", "run/gfm.ckpt", "run/unet.ckpt", "run/encoder.ckpt",
                           "run/reports/GFM.json", "run/reports/U-Net.csv", "run/figure.svg"})
    v.require(fs::exists(base / "a" / must), std::string(must) + " not produced");
  v.detail += (v.detail.empty() ? "" : "; ") + std::to_string(files) + " files (" + std::to_string(bytes) +
              " bytes) identical across runs" + fmt(", slowest run %.0fs", worst);
  return v;
}

}  // namespace

int main() {
  log::set_level(log::Level::warn);
  criterion(1, "paper-preset parameter counts", parameter_counts);
  criterion(2, "warmup-cosine schedule", schedule);
  criterion(3, "finite-difference gradient suite", gradient_suite);
  criterion(4, "sparse-label contract", sparse_contract);
  criterion(5, "frozen-encoder contract", frozen_encoder);
  criterion(6, "median composite oracle", composite_oracle);
  criterion(7, "bin-wise RMSE oracle", evaluation_oracle);
  criterion(8, "overfit 8 tiles below 10% of label SD", overfit);
  criterion(9, "SimMIM pre-training efficacy", pretraining);
  criterion(10, "per-region transfer report", transfer_report);
  criterion(11, "quickstart determinism", determinism);
  std::printf("%d criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
