// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include <cmath>
#include <limits>
#include <vector>

#include "agb/models/model.hpp"
#include "agb/numcore/ops.hpp"
#include "agb/training/training.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace agb;
using namespace agb::training;
using nc::DType;
using nc::Tensor;

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

std::vector<geo::LabeledTile> tiles(std::uint64_t seed, int n, int size = 32) {
  nc::Prng rng(seed);
  std::vector<geo::LabeledTile> out;
  for (int i = 0; i < n; ++i) out.push_back(oracle::random_tile(rng, size, 0.1, "tile_" + std::to_string(i)));
  return out;
}

bool same_records(const TrainHistory& a, const TrainHistory& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto &x = a.records[i], &y = b.records[i];
    if (x.epoch != y.epoch || x.lr != y.lr || x.train_loss != y.train_loss || x.val_loss != y.val_loss) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("lr schedule") {
  const ScheduleConfig cfg{100, 2e-4, 10};
  CHECK(lr_schedule(9, cfg) == 2e-4);
  CHECK(lr_schedule(10, cfg) == 2e-4);
  CHECK(lr_schedule(0, cfg) == doctest::Approx(2e-5).epsilon(1e-12));
  CHECK(lr_schedule(55, cfg) == doctest::Approx(1e-4).epsilon(1e-12));
  for (int e = 1; e < 10; ++e) CHECK(lr_schedule(e, cfg) > lr_schedule(e - 1, cfg));
  for (int e = 11; e < 100; ++e) CHECK(lr_schedule(e, cfg) < lr_schedule(e - 1, cfg));
  CHECK(lr_schedule(99, cfg) < 2e-6);
  CHECK(lr_schedule(99, cfg) > 0.0);

  CHECK(capture([&] { lr_schedule(100, cfg); }).kind() == ErrorKind::invalid_argument);
  CHECK(capture([&] { lr_schedule(-1, cfg); }).kind() == ErrorKind::invalid_argument);
  CHECK(capture([&] { lr_schedule(0, ScheduleConfig{10, 1e-3, 10}); }).kind() == ErrorKind::config);
  CHECK(capture([&] { lr_schedule(0, ScheduleConfig{10, 0.0, 2}); }).kind() == ErrorKind::config);
  // Without warmup the cosine starts at epoch 0.
  CHECK(lr_schedule(0, ScheduleConfig{10, 1e-3, 0}) == 1e-3);
}

TEST_CASE("masked RMSE loss") {
  auto t = [](std::vector<double> v) { return Tensor::from({1, 1, 1, static_cast<std::int64_t>(v.size())}, v, DType::f64); };
  CHECK(masked_rmse_loss(t({10, 99}), t({7, 0}), {1, 0}).item() == 3.0);
  CHECK(masked_rmse_loss(t({1, 2, 3}), t({1, 2, 3}), {1, 1, 1}).item() == 0.0);
  auto e = capture([&] { masked_rmse_loss(t({1, 2}), t({1, 2}), {0, 0}); });
  CHECK(e.code() == "E_EMPTY_LABELS");
  CHECK(e.kind() == ErrorKind::data);
  CHECK(capture([&] { masked_rmse_loss(t({1, 2}), t({1, 2, 3}), {1, 1, 1}); }).kind() == ErrorKind::invalid_argument);
}

TEST_CASE("masked RMSE ignores invalid pixels bit-exactly") {
  nc::Prng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.below(200));
    std::vector<double> p(static_cast<std::size_t>(n)), l(p.size());
    std::vector<std::uint8_t> valid(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = rng.uniform(0, 400);
      l[i] = rng.uniform(0, 400);
      valid[i] = rng.uniform() < 0.3;
    }
    valid[rng.below(p.size())] = 1;
    auto run = [&](const std::vector<double>& pv, const std::vector<double>& lv) {
      Tensor pred = Tensor::from({n}, pv, DType::f32).set_requires_grad(true);
      Tensor label = Tensor::from({n}, lv, DType::f32).set_requires_grad(true);
      Tensor loss = masked_rmse_loss(pred, label, valid);
      nc::backward(loss);
      return std::make_tuple(loss.item(), pred.grad().to_vector(), label.grad().to_vector());
    };
    const auto base = run(p, l);
    auto p2 = p, l2 = l;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!valid[i]) {
        p2[i] = rng.uniform(-1e6, 1e6);
        l2[i] = trial % 2 ? std::numeric_limits<double>::quiet_NaN() : rng.uniform(-1e6, 1e6);
      }
    const auto moved = run(p2, l2);
    CHECK(std::get<0>(base) == std::get<0>(moved));
    CHECK(std::get<1>(base) == std::get<1>(moved));
    CHECK(std::get<2>(base) == std::get<2>(moved));
  }
}

TEST_CASE("history serialization") {
  TrainHistory h;
  h.records.push_back({0, 1e-4, 12.5, std::nullopt, 0.25});
  h.records.push_back({1, 2e-4, 11.0, 10.0 / 3.0, 0.5});
  const auto csv = h.to_csv();
  CHECK(csv.rfind("epoch,lr,train_loss,val_loss,seconds\n", 0) == 0);
  CHECK(csv.find("\n0,0.0001,12.5,,0.250000\n") != std::string::npos);
  const auto back = history_from_json(h.to_json());
  CHECK(same_records(h, back));
  auto j = h.to_json();
  j["records"][1]["epoch"] = 5;
  CHECK(capture([&] { history_from_json(j); }).code() == "E_PARSE");
}

TEST_CASE("batches stack tiles in the given order") {
  auto ts = tiles(1, 3);
  auto ptrs = oracle::pointers(ts);
  const Batch b = make_batch(ptrs, {2, 0});
  CHECK(b.image.shape() == nc::Shape{2, 6, 32, 32});
  CHECK(b.label.shape() == nc::Shape{2, 1, 32, 32});
  CHECK(b.image.value(0) == ts[2].image[0]);
  CHECK(b.image.value(6 * 32 * 32) == ts[0].image[0]);
  CHECK(std::vector<std::uint8_t>(b.valid.begin(), b.valid.begin() + 1024) == ts[2].valid);
}

TEST_CASE("pre-training is deterministic and learns") {
  auto ts = tiles(2, 4);
  auto ptrs = oracle::pointers(ts);
  auto cfg = models::ModelConfig::toy();
  PretrainConfig pc;
  pc.epochs = 3;
  pc.warmup_epochs = 1;
  pc.batch_size = 2;
  pc.seed = 9;
  auto a = models::make_model(models::ModelKind::simmim, cfg, 4);
  auto b = models::make_model(models::ModelKind::simmim, cfg, 4);
  const auto ra = train_pretrain(a, ptrs, pc);
  const auto rb = train_pretrain(b, ptrs, pc);
  CHECK(same_records(ra.history, rb.history));
  CHECK(a.store->checksum() == b.store->checksum());
  REQUIRE(ra.history.records.size() == 3);
  for (const auto& r : ra.history.records) CHECK(std::isfinite(r.train_loss));
  CHECK(ra.optimizer.t == 6);

  pc.seed = 10;
  auto c = models::make_model(models::ModelKind::simmim, cfg, 4);
  CHECK_FALSE(same_records(train_pretrain(c, ptrs, pc).history, ra.history));
  CHECK(capture([&] { train_pretrain(c, {}, pc); }).code() == "E_EMPTY_SPLIT");
}

TEST_CASE("fine-tuning keeps the encoder frozen") {
  auto ts = tiles(3, 4, 64);
  auto ptrs = oracle::pointers(ts);
  auto m = models::make_model(models::ModelKind::gfm, models::ModelConfig::toy(), 5);
  const auto enc = m.store->checksum(models::Component::encoder);
  std::vector<std::vector<double>> before;
  for (const auto& e : m.store->entries())
    if (e.component == models::Component::decoder) before.push_back(e.value.to_vector());

  FinetuneConfig fc;
  fc.epochs = 20;
  fc.batch_size = 2;
  int bests = 0;
  double last_best = std::numeric_limits<double>::infinity();
  TrainHooks hooks;
  hooks.on_best = [&](const EpochRecord& r) {
    CHECK(*r.val_loss < last_best);
    last_best = *r.val_loss;
    ++bests;
  };
  const auto res = train_finetune(m, {ptrs[0], ptrs[1], ptrs[2]}, {ptrs[3]}, fc, hooks);
  CHECK(m.store->checksum(models::Component::encoder) == enc);
  CHECK(res.history.records.at(10).lr == 2e-4);
  CHECK(res.history.records.at(9).lr == 2e-4);
  CHECK(bests >= 1);
  CHECK(res.best_epoch >= 0);
  for (const auto& r : res.history.records) CHECK(r.val_loss.has_value());

  std::int64_t changed = 0, total = 0;
  std::size_t k = 0;
  for (const auto& e : m.store->entries()) {
    if (e.component != models::Component::decoder) continue;
    const auto now = e.value.to_vector();
    for (std::size_t i = 0; i < now.size(); ++i) changed += now[i] != before[k][i] ? 1 : 0;
    total += static_cast<std::int64_t>(now.size());
    ++k;
  }
  CHECK(static_cast<double>(changed) >= 0.99 * static_cast<double>(total));

  const auto e = capture([&] { train_finetune(m, {}, {}, fc); });
  CHECK(e.code() == "E_EMPTY_SPLIT");
  CHECK(e.kind() == ErrorKind::invalid_argument);
  auto simmim = models::make_model(models::ModelKind::simmim, models::ModelConfig::toy(), 5);
  CHECK(capture([&] { train_finetune(simmim, ptrs, {}, fc); }).kind() == ErrorKind::invalid_argument);
}

TEST_CASE("baseline training") {
  auto ts = tiles(4, 3);
  auto ptrs = oracle::pointers(ts);
  auto m = models::make_model(models::ModelKind::unet, models::ModelConfig::toy(), 6);
  CHECK(m.store->count(true) == m.store->count(false));
  BaselineConfig bc;
  bc.epochs = 3;
  const auto res = train_baseline(m, ptrs, {}, bc);
  // batch_size 128 is clamped to the 3 available tiles: one step per epoch.
  CHECK(res.optimizer.t == 3);
  for (const auto& r : res.history.records) {
    CHECK(r.lr == 0.01);
    CHECK_FALSE(r.val_loss.has_value());
  }
  auto again = models::make_model(models::ModelKind::unet, models::ModelConfig::toy(), 6);
  CHECK(same_records(train_baseline(again, ptrs, {}, bc).history, res.history));
  CHECK(again.store->checksum() == m.store->checksum());
}

TEST_CASE("non-finite data aborts with a numeric error") {
  auto ts = tiles(5, 2);
  ts[1].image[7] = std::numeric_limits<float>::quiet_NaN();
  auto m = models::make_model(models::ModelKind::unet, models::ModelConfig::toy(), 6);
  BaselineConfig bc;
  bc.epochs = 1;
  bc.batch_size = 2;
  const auto e = capture([&] { train_baseline(m, oracle::pointers(ts), {}, bc); });
  CHECK(e.kind() == ErrorKind::numeric);
  CHECK(std::string(e.what()).find("epoch 0 step 0") != std::string::npos);
}
