// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agb/evaluation/evaluation.hpp"
#include "agb/geodata/points.hpp"
#include "agb/numcore/gradcheck.hpp"
#include "agb/pipeline/config.hpp"

namespace agb::pipeline {

namespace fs = std::filesystem;

/// Each run_* function implements one CLI subcommand. Outputs carry the
/// config hash and seed; nothing they write depends on wall time except the
/// `seconds` column of training histories.

void run_synth(const RunConfig& cfg, const fs::path& out_dir);

void run_composite(const RunConfig& cfg, const fs::path& scenes_dir, const fs::path& out_base);

geo::DatasetManifest run_build_dataset(const RunConfig& cfg, const fs::path& composite, const fs::path& points,
                                       const fs::path& ecomap, const fs::path& out_dir);

/// Trains SimMIM on every tile of the dataset (labels are not read).
/// Writes `out`, `<out>.best` and `<out>.history.{csv,json}`.
void run_pretrain(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out);

/// Fine-tunes the regression head on the fine-tune split, selecting on the
/// validation split. `region` restricts both splits to one eco-region.
void run_finetune(const RunConfig& cfg, const fs::path& encoder, const fs::path& data_dir, const fs::path& out,
                  std::optional<geo::EcoRegion> region = std::nullopt);

void run_train_unet(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out,
                    std::optional<geo::EcoRegion> region = std::nullopt);

/// Either one checkpoint for every tile, or one per eco-region.
struct ModelSpec {
  std::optional<fs::path> single;
  std::map<geo::EcoRegion, fs::path> per_region;

  /// "a.ckpt" or "EC1=a.ckpt,EC2=b.ckpt,EC3=c.ckpt".
  static ModelSpec parse(const std::string& text);
};

struct EvaluateOptions {
  /// Replaces eval.bins when set.
  std::optional<eval::BinSpec> bins;
  /// Report model id; defaults to the checkpoint's model kind.
  std::string name;
  /// Replaces eval.formats when non-empty.
  std::vector<std::string> formats;
};

/// Writes `<out_base>.<format>` for each format.
eval::EvalReport run_evaluate(const RunConfig& cfg, const ModelSpec& models, const fs::path& data_dir,
                              const fs::path& out_base, const EvaluateOptions& opts = {});

/// Comparison chart of previously written reports.
void run_report(const std::vector<fs::path>& inputs, const fs::path& out_svg);

struct CheckLine {
  std::string name;
  std::uint64_t seed = 0;
  nc::GradCheckReport report;
};

/// `op` names a primitive, `model` a toy model path or "all"/"toy". With
/// neither set, every primitive and model path is checked.
std::vector<CheckLine> run_grad_check(const std::string& op, const std::string& model, int seeds,
                                      const std::function<void(const CheckLine&)>& on_line = {});

}  // namespace agb::pipeline
