// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "agb/geodata/tiles.hpp"
#include "agb/models/model.hpp"
#include "agb/numcore/adam.hpp"
#include "agb/numcore/tensor.hpp"

namespace agb::training {

/// Linear warmup to max_lr followed by a cosine decay that reaches zero at
/// the virtual epoch `epochs`.
struct ScheduleConfig {
  int epochs = 100;
  double max_lr = 2e-4;
  int warmup_epochs = 10;

  void validate() const;
};

/// Learning rate for a whole epoch.
double lr_schedule(int epoch, const ScheduleConfig& cfg);

struct PretrainConfig {
  int epochs = 50;
  double max_lr = 1e-4;
  int warmup_epochs = 5;
  int batch_size = 8;
  /// Global gradient-norm clip; 0 disables clipping.
  double grad_clip = 0.0;
  std::uint64_t seed = 0;

  ScheduleConfig schedule() const { return {epochs, max_lr, warmup_epochs}; }
};

struct FinetuneConfig {
  int epochs = 100;
  double max_lr = 2e-4;
  int warmup_epochs = 10;
  int batch_size = 8;
  double grad_clip = 0.0;
  std::uint64_t seed = 0;

  ScheduleConfig schedule() const { return {epochs, max_lr, warmup_epochs}; }
};

struct BaselineConfig {
  int epochs = 100;
  double lr = 0.01;
  int batch_size = 128;
  double grad_clip = 0.0;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;

  /// Header `epoch,lr,train_loss,val_loss,seconds`; an absent validation
  /// loss is an empty field.
  std::string to_csv() const;
  nlohmann::json to_json() const;
  /// Writes `<base>.csv` and `<base>.json`.
  void write(const std::filesystem::path& base) const;
};

TrainHistory history_from_json(const nlohmann::json& j);

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  /// Called after an epoch whose selection loss (validation when present,
  /// training otherwise) is the lowest so far.
  std::function<void(const EpochRecord&)> on_best;
};

struct TrainResult {
  TrainHistory history;
  nc::AdamState optimizer;
  int best_epoch = -1;
};

/// sqrt(Σ_valid (pred − label)² / N_valid) over a whole batch.
/// Throws E_EMPTY_LABELS when no pixel is valid.
nc::Tensor masked_rmse_loss(const nc::Tensor& pred, const nc::Tensor& label, const std::vector<std::uint8_t>& valid);

/// Stacked tensors for a list of tiles.
struct Batch {
  nc::Tensor image;  ///< [B, 6, T, T]
  nc::Tensor label;  ///< [B, 1, T, T]
  std::vector<std::uint8_t> valid;
};

Batch make_batch(const std::vector<const geo::LabeledTile*>& tiles, const std::vector<std::size_t>& picks,
                 nc::DType dtype = nc::DType::f32);

/// SimMIM pre-training. Each epoch reshuffles the tiles and draws fresh masks.
TrainResult train_pretrain(models::ModelBundle& simmim, const std::vector<const geo::LabeledTile*>& tiles,
                           const PretrainConfig& cfg, const TrainHooks& hooks = {});

/// Trains the regression head on top of the frozen encoder. The encoder is
/// frozen on entry and verified unchanged on exit.
TrainResult train_finetune(models::ModelBundle& gfm, const std::vector<const geo::LabeledTile*>& train,
                           const std::vector<const geo::LabeledTile*>& validation, const FinetuneConfig& cfg,
                           const TrainHooks& hooks = {});

/// Trains every U-Net parameter at a constant learning rate.
TrainResult train_baseline(models::ModelBundle& unet, const std::vector<const geo::LabeledTile*>& train,
                           const std::vector<const geo::LabeledTile*>& validation, const BaselineConfig& cfg,
                           const TrainHooks& hooks = {});

/// Pixel-pooled masked RMSE of a regression model over the given tiles.
double pooled_rmse(const models::ModelBundle& model, const std::vector<const geo::LabeledTile*>& tiles,
                   int batch_size = 8);

/// Model predictions for each tile, [T·T] each, in input order.
std::vector<std::vector<float>> predict_tiles(const models::ModelBundle& model,
                                              const std::vector<const geo::LabeledTile*>& tiles,
                                              int batch_size = 8);

}  // namespace agb::training
