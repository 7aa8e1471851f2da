// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agb/models/model.hpp"
#include "agb/numcore/adam.hpp"
#include "json.hpp"

namespace agb::models {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  ModelKind kind = ModelKind::gfm;
  ModelConfig config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::int64_t epoch = 0;
  /// Free-form provenance (for example the source encoder checkpoint).
  nlohmann::json extra = nlohmann::json::object();
};

struct ParamRecord {
  std::string name;
  Component component = Component::decoder;
  bool trainable = true;
  nc::Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  CheckpointMeta meta;
  std::vector<ParamRecord> params;
  /// Moments are keyed by trainable parameter name, in store order.
  std::optional<nc::AdamState> optimizer;
  std::vector<std::string> optimizer_names;

  const ParamRecord* find(const std::string& name) const;
};

/// Binary container: magic, format version, JSON header, then named f32
/// little-endian parameter blobs and the optional Adam state.
void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta, const ParamStore& store,
                     const nc::AdamState* optimizer = nullptr);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies every stored parameter whose name starts with `prefix` into the
/// store, including trainable flags. Missing names or shape differences
/// refuse with a diagnostic.
void load_params(const Checkpoint& ckpt, ParamStore& store, const std::string& prefix = "");

/// Rebuilds the model a checkpoint describes, restoring all parameters.
ModelBundle model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace agb::models
