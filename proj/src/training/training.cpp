// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/training/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "agb/error.hpp"
#include "agb/log.hpp"
#include "agb/numcore/ops.hpp"
#include "agb/numcore/prng.hpp"

namespace agb::training {

using geo::LabeledTile;
using nc::Tensor;
using TileList = std::vector<const LabeledTile*>;

void ScheduleConfig::validate() const {
  if (epochs < 1) throw_config("schedule: epochs must be at least 1");
  if (warmup_epochs < 0 || warmup_epochs >= epochs) throw_config("schedule: warmup_epochs must lie in [0, epochs)");
  if (!(max_lr > 0.0) || !std::isfinite(max_lr)) throw_config("schedule: max_lr must be positive");
}

double lr_schedule(int epoch, const ScheduleConfig& cfg) {
  cfg.validate();
  if (epoch < 0 || epoch >= cfg.epochs)
    throw_invalid("lr_schedule: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(cfg.epochs) + ")");
  if (epoch < cfg.warmup_epochs) return cfg.max_lr * (epoch + 1) / cfg.warmup_epochs;
  const double progress =
      static_cast<double>(epoch - cfg.warmup_epochs) / static_cast<double>(cfg.epochs - cfg.warmup_epochs);
  return 0.5 * cfg.max_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

// ---- history ----------------------------------------------------------------

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,lr,train_loss,val_loss,seconds\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,", r.epoch, r.lr, r.train_loss);
    out += buf;
    if (r.val_loss) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.val_loss);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6f\n", r.seconds);
    out += buf;
  }
  return out;
}

nlohmann::json TrainHistory::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"epoch", r.epoch},
                   {"lr", r.lr},
                   {"train_loss", r.train_loss},
                   {"val_loss", r.val_loss ? nlohmann::json(*r.val_loss) : nlohmann::json(nullptr)},
                   {"seconds", r.seconds}});
  }
  return {{"records", arr}};
}

TrainHistory history_from_json(const nlohmann::json& j) {
  TrainHistory h;
  try {
    for (const auto& r : j.at("records")) {
      EpochRecord e;
      e.epoch = r.at("epoch").get<int>();
      e.lr = r.at("lr").get<double>();
      e.train_loss = r.at("train_loss").get<double>();
      if (!r.at("val_loss").is_null()) e.val_loss = r.at("val_loss").get<double>();
      e.seconds = r.at("seconds").get<double>();
      if (e.epoch != static_cast<int>(h.records.size())) throw_data("E_PARSE", "history epochs are not contiguous");
      h.records.push_back(e);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw_data("E_PARSE", std::string("history: ") + ex.what());
  }
  return h;
}

void TrainHistory::write(const std::filesystem::path& base) const {
  auto put = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw_data("E_IO", "cannot write " + p.string());
    f << text;
  };
  put(base.string() + ".csv", to_csv());
  put(base.string() + ".json", to_json().dump(2) + "\n");
}

// ---- losses and batches -------------------------------------------------------

Tensor masked_rmse_loss(const Tensor& pred, const Tensor& label, const std::vector<std::uint8_t>& valid) {
  if (!pred.defined() || !label.defined() || pred.shape() != label.shape())
    throw_invalid("masked_rmse_loss: prediction and label shapes differ");
  return nc::masked_rmse(pred, label, valid);
}

Batch make_batch(const TileList& tiles, const std::vector<std::size_t>& picks, nc::DType dtype) {
  if (picks.empty()) throw_invalid("make_batch: empty batch");
  const std::int64_t t = tiles.at(picks[0])->size;
  const std::size_t plane = static_cast<std::size_t>(t * t);
  const auto b = static_cast<std::int64_t>(picks.size());
  std::vector<double> image(picks.size() * geo::kImageBands * plane), label(picks.size() * plane);
  Batch out;
  out.valid.resize(picks.size() * plane);
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const LabeledTile& tile = *tiles.at(picks[k]);
    if (tile.size != t) throw_invalid("make_batch: tiles differ in size");
    std::copy(tile.image.begin(), tile.image.end(), image.begin() + static_cast<std::ptrdiff_t>(k * 6 * plane));
    std::copy(tile.label.begin(), tile.label.end(), label.begin() + static_cast<std::ptrdiff_t>(k * plane));
    std::copy(tile.valid.begin(), tile.valid.end(), out.valid.begin() + static_cast<std::ptrdiff_t>(k * plane));
  }
  out.image = Tensor::from({b, geo::kImageBands, t, t}, image, dtype);
  out.label = Tensor::from({b, 1, t, t}, label, dtype);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

/// One optimizer step on the store's trainable parameters.
double optimize(models::ParamStore& store, const std::function<Tensor()>& loss_fn, nc::AdamState& state, double lr,
                double clip, const std::string& where) {
  auto params = store.trainable();
  const auto names = store.trainable_names();
  for (auto& p : params) p.zero_grad();
  Tensor loss = loss_fn();
  const double value = loss.item();
  if (!std::isfinite(value)) throw Error(ErrorKind::numeric, "E_NAN", where + ": non-finite loss");
  nc::backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.push_back(p.grad());
  if (clip > 0.0) {
    double sq = 0.0;
    for (const auto& g : grads)
      if (g.defined())
        for (double v : g.to_vector()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > clip)
      for (auto& g : grads)
        if (g.defined()) g = nc::scale(g, clip / norm);
  }
  nc::adam_step(params, grads, names, state, lr);
  return value;
}

/// Pixel-pooled squared-error accumulator.
struct Pooled {
  double sse = 0.0;
  std::int64_t n = 0;

  void add(const Tensor& pred, const Batch& batch) {
    const auto p = pred.to_vector();
    const auto l = batch.label.to_vector();
    for (std::size_t i = 0; i < p.size(); ++i)
      if (batch.valid[i]) {
        const double e = p[i] - l[i];
        sse += e * e;
        ++n;
      }
  }
  std::optional<double> rmse() const {
    if (n == 0) return std::nullopt;
    return std::sqrt(sse / static_cast<double>(n));
  }
};

std::vector<std::vector<std::size_t>> chunks(std::size_t n, std::size_t size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += size) {
    std::vector<std::size_t> c;
    for (std::size_t j = i; j < std::min(n, i + size); ++j) c.push_back(j);
    out.push_back(std::move(c));
  }
  return out;
}

struct EpochPlan {
  int epochs = 0;
  int batch_size = 1;
  std::uint64_t seed = 0;
  std::function<double(int)> lr;
  /// Runs one step and returns its loss.
  std::function<double(const std::vector<std::size_t>&, double lr, nc::Prng&, const std::string&)> step;
  std::function<std::optional<double>()> validate;
};

void run_epochs(std::size_t n, const EpochPlan& plan, const TrainHooks& hooks, TrainResult& result) {
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < plan.epochs; ++epoch) {
    const auto t0 = Clock::now();
    nc::Prng rng = nc::Prng(plan.seed).fork(static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = plan.lr(epoch);
    double total = 0.0;
    int steps = 0;
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(plan.batch_size)) {
      std::vector<std::size_t> picks(order.begin() + static_cast<std::ptrdiff_t>(i),
                                     order.begin() + static_cast<std::ptrdiff_t>(
                                                         std::min(n, i + static_cast<std::size_t>(plan.batch_size))));
      const std::string where = "epoch " + std::to_string(epoch) + " step " + std::to_string(steps);
      total += plan.step(picks, rec.lr, rng, where);
      ++steps;
    }
    rec.train_loss = total / steps;
    if (plan.validate) rec.val_loss = plan.validate();
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    result.history.records.push_back(rec);
    log::debug("epoch ", epoch, " lr=", rec.lr, " train=", rec.train_loss,
               rec.val_loss ? " val=" + std::to_string(*rec.val_loss) : std::string());
    if (hooks.on_epoch) hooks.on_epoch(rec);
    const double selection = rec.val_loss.value_or(rec.train_loss);
    if (selection < best) {
      best = selection;
      result.best_epoch = epoch;
      if (hooks.on_best) hooks.on_best(rec);
    }
  }
}

void require_tiles(const TileList& tiles, const char* what) {
  if (tiles.empty())
    throw Error(ErrorKind::invalid_argument, "E_EMPTY_SPLIT", std::string(what) + ": no training tiles");
}

int clamp_batch(int batch_size, std::size_t n, const char* what) {
  if (batch_size < 1) throw_config(std::string(what) + ": batch_size must be positive");
  if (static_cast<std::size_t>(batch_size) > n) {
    log::warn(what, ": batch_size ", batch_size, " exceeds the ", n, " available tiles; using ", n);
    return static_cast<int>(n);
  }
  return batch_size;
}

using Features = std::vector<Tensor>;

/// Frozen-encoder features for every tile, one [1, C, h, w] tensor per stage.
std::vector<Features> encode_all(const models::SwinEncoder& encoder, const TileList& tiles, nc::DType dtype) {
  nc::NoGradGuard guard;
  std::vector<Features> out(tiles.size());
  for (const auto& c : chunks(tiles.size(), 8)) {
    const auto feats = encoder.forward(make_batch(tiles, c, dtype).image);
    for (std::size_t k = 0; k < c.size(); ++k)
      for (const auto& f : feats) out[c[k]].push_back(nc::slice(f, 0, static_cast<std::int64_t>(k), 1));
  }
  return out;
}

Features stack(const std::vector<Features>& all, const std::vector<std::size_t>& picks) {
  Features out;
  for (std::size_t s = 0; s < all.at(picks[0]).size(); ++s) {
    std::vector<Tensor> parts;
    for (auto p : picks) parts.push_back(all[p][s]);
    out.push_back(parts.size() == 1 ? parts[0] : nc::concat(parts, 0));
  }
  return out;
}

}  // namespace

// ---- loops ---------------------------------------------------------------------

TrainResult train_pretrain(models::ModelBundle& model, const TileList& tiles, const PretrainConfig& cfg,
                           const TrainHooks& hooks) {
  if (!model.simmim) throw_invalid("train_pretrain: expected a simmim model");
  if (tiles.empty()) throw Error(ErrorKind::invalid_argument, "E_EMPTY_SPLIT", "train_pretrain: no tiles");
  const auto schedule = cfg.schedule();
  schedule.validate();
  const models::SimMIM& sm = *model.simmim;
  const int ps = model.config.simmim.mask_patch_size;
  const int grid = static_cast<int>(tiles[0]->size) / ps;
  if (grid * ps != tiles[0]->size) throw_invalid("train_pretrain: tile size not divisible by the mask patch size");

  TrainResult result;
  EpochPlan plan;
  plan.epochs = cfg.epochs;
  plan.batch_size = clamp_batch(cfg.batch_size, tiles.size(), "pretrain");
  plan.seed = cfg.seed;
  plan.lr = [&](int e) { return lr_schedule(e, schedule); };
  plan.step = [&](const std::vector<std::size_t>& picks, double lr, nc::Prng& rng, const std::string& where) {
    const Batch batch = make_batch(tiles, picks, model.store->dtype());
    std::vector<models::PatchMask> masks;
    for (std::size_t k = 0; k < picks.size(); ++k)
      masks.push_back(models::random_patch_mask(grid, grid, model.config.simmim.mask_ratio, rng));
    return optimize(
        *model.store, [&] { return sm.forward(batch.image, masks).loss; }, result.optimizer, lr, cfg.grad_clip,
        "pretrain " + where);
  };
  run_epochs(tiles.size(), plan, hooks, result);
  return result;
}

TrainResult train_finetune(models::ModelBundle& model, const TileList& train, const TileList& validation,
                           const FinetuneConfig& cfg, const TrainHooks& hooks) {
  if (!model.gfm) throw_invalid("train_finetune: expected a gfm model");
  require_tiles(train, "train_finetune");
  const auto schedule = cfg.schedule();
  schedule.validate();
  models::freeze_encoder(*model.store);
  const auto encoder_sum = model.store->checksum(models::Component::encoder);
  const auto dtype = model.store->dtype();
  const auto& encoder = model.gfm->encoder();
  const auto& head = model.gfm->head();
  const auto train_feats = encode_all(encoder, train, dtype);
  const auto val_feats = encode_all(encoder, validation, dtype);

  TrainResult result;
  EpochPlan plan;
  plan.epochs = cfg.epochs;
  plan.batch_size = clamp_batch(cfg.batch_size, train.size(), "finetune");
  plan.seed = cfg.seed;
  plan.lr = [&](int e) { return lr_schedule(e, schedule); };
  plan.step = [&](const std::vector<std::size_t>& picks, double lr, nc::Prng&, const std::string& where) {
    const Batch batch = make_batch(train, picks, dtype);
    const Features feats = stack(train_feats, picks);
    return optimize(
        *model.store, [&] { return masked_rmse_loss(head.forward(feats), batch.label, batch.valid); },
        result.optimizer, lr, cfg.grad_clip, "finetune " + where);
  };
  if (!validation.empty()) {
    plan.validate = [&]() -> std::optional<double> {
      nc::NoGradGuard guard;
      Pooled pooled;
      for (const auto& c : chunks(validation.size(), 8)) pooled.add(head.forward(stack(val_feats, c)), make_batch(validation, c, dtype));
      return pooled.rmse();
    };
  }
  run_epochs(train.size(), plan, hooks, result);
  if (model.store->checksum(models::Component::encoder) != encoder_sum)
    throw Error(ErrorKind::internal, "E_INTERNAL", "train_finetune: frozen encoder changed during training");
  return result;
}

TrainResult train_baseline(models::ModelBundle& model, const TileList& train, const TileList& validation,
                           const BaselineConfig& cfg, const TrainHooks& hooks) {
  if (!model.unet) throw_invalid("train_baseline: expected a unet model");
  require_tiles(train, "train_baseline");
  if (cfg.epochs < 1) throw_config("baseline: epochs must be at least 1");
  if (!(cfg.lr > 0.0)) throw_config("baseline: lr must be positive");
  const auto dtype = model.store->dtype();

  TrainResult result;
  EpochPlan plan;
  plan.epochs = cfg.epochs;
  plan.batch_size = clamp_batch(cfg.batch_size, train.size(), "baseline");
  plan.seed = cfg.seed;
  plan.lr = [&](int) { return cfg.lr; };
  plan.step = [&](const std::vector<std::size_t>& picks, double lr, nc::Prng&, const std::string& where) {
    const Batch batch = make_batch(train, picks, dtype);
    return optimize(
        *model.store, [&] { return masked_rmse_loss(model.predict(batch.image), batch.label, batch.valid); },
        result.optimizer, lr, cfg.grad_clip, "baseline " + where);
  };
  if (!validation.empty()) {
    plan.validate = [&]() -> std::optional<double> { return pooled_rmse(model, validation); };
  }
  run_epochs(train.size(), plan, hooks, result);
  return result;
}

// ---- inference -----------------------------------------------------------------

std::vector<std::vector<float>> predict_tiles(const models::ModelBundle& model, const TileList& tiles,
                                              int batch_size) {
  nc::NoGradGuard guard;
  std::vector<std::vector<float>> out(tiles.size());
  for (const auto& c : chunks(tiles.size(), static_cast<std::size_t>(std::max(1, batch_size)))) {
    const auto pred = model.predict(make_batch(tiles, c, model.store->dtype()).image).to_vector();
    const std::size_t plane = pred.size() / c.size();
    for (std::size_t k = 0; k < c.size(); ++k)
      out[c[k]].assign(pred.begin() + static_cast<std::ptrdiff_t>(k * plane),
                       pred.begin() + static_cast<std::ptrdiff_t>((k + 1) * plane));
  }
  return out;
}

double pooled_rmse(const models::ModelBundle& model, const TileList& tiles, int batch_size) {
  nc::NoGradGuard guard;
  Pooled pooled;
  for (const auto& c : chunks(tiles.size(), static_cast<std::size_t>(std::max(1, batch_size)))) {
    const Batch batch = make_batch(tiles, c, model.store->dtype());
    pooled.add(model.predict(batch.image), batch);
  }
  const auto r = pooled.rmse();
  if (!r) throw_data("E_EMPTY_LABELS", "pooled_rmse: no valid label pixels");
  return *r;
}

}  // namespace agb::training
