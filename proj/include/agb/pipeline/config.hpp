// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "agb/artifact.hpp"
#include "agb/evaluation/evaluation.hpp"
#include "agb/geodata/dataset.hpp"
#include "agb/geodata/synth.hpp"
#include "agb/models/config.hpp"
#include "agb/training/training.hpp"

namespace agb::pipeline {

struct GeodataConfig {
  /// The synth seed is taken from RunConfig::seed.
  geo::SynthConfig synth;
  geo::TilingOptions tiling;
  double validation_fraction = 0.2;
  /// Optional ISO date window for point labels; empty bounds are open.
  std::string date_from;
  std::string date_to;
};

struct EvalConfig {
  eval::BinSpec bins;
  /// Any of csv, json, svg.
  std::vector<std::string> formats{"csv", "json"};
};

/// Default artifact locations. Relative entries resolve against `root`,
/// and a relative `root` against the working directory.
struct PathsConfig {
  std::string root = "run";
  std::string world = "world";
  std::string composite = "composite";
  std::string data = "data";
  std::string encoder = "encoder.ckpt";
  std::string gfm = "gfm.ckpt";
  std::string unet = "unet.ckpt";
  std::string reports = "reports";
  std::string figure = "figure.svg";

  std::filesystem::path resolve(const std::string& entry) const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  GeodataConfig geodata;
  models::ModelConfig model;
  training::PretrainConfig pretrain;
  training::FinetuneConfig finetune;
  training::BaselineConfig baseline;
  EvalConfig eval;
  PathsConfig paths;

  void validate() const;
  /// Every field, defaults included, with sorted keys.
  nlohmann::json to_json() const;
  std::string canonical() const { return to_json().dump(); }
  /// FNV-1a 64 of the canonical JSON as 16 lowercase hex digits.
  std::string hash() const;
  ArtifactTags tags() const { return {hash(), seed}; }
};

/// Missing keys keep their defaults; unknown keys raise a config error.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace agb::pipeline
