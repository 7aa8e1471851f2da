// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "agb/numcore/prng.hpp"
#include "agb/numcore/tensor.hpp"

namespace agb::models {

enum class Component : std::uint8_t { encoder, decoder };

const char* to_string(Component c);

/// trunc_normal: σ = 0.02. he_normal: σ = sqrt(2 / fan_in), truncated at 2σ.
enum class Init : std::uint8_t { trunc_normal, he_normal, zeros, ones };

struct ParamEntry {
  std::string name;
  Component component = Component::decoder;
  bool trainable = true;
  nc::Shape shape;
  /// Undefined in shape-only stores.
  nc::Tensor value;
};

/// Named parameters in registration order. A shape-only store records names
/// and shapes without allocating, which is enough for counting.
class ParamStore {
 public:
  explicit ParamStore(nc::DType dtype = nc::DType::f32, bool shape_only = false)
      : dtype_(dtype), shape_only_(shape_only) {}

  nc::Tensor add(const std::string& name, nc::Shape shape, Component component, Init init, nc::Prng& rng);

  bool shape_only() const { return shape_only_; }
  nc::DType dtype() const { return dtype_; }

  const std::vector<ParamEntry>& entries() const { return entries_; }
  std::vector<ParamEntry>& entries() { return entries_; }
  const ParamEntry& entry(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::int64_t count(bool trainable_only = false) const;
  std::int64_t count(Component component) const;

  /// Marks every parameter of the component as not trainable.
  void freeze(Component component);
  /// Trainable leaves, in registration order.
  std::vector<nc::Tensor> trainable() const;
  std::vector<std::string> trainable_names() const;

  /// FNV-1a over names, shapes and raw bytes; restricted to one component when given.
  std::uint64_t checksum(std::optional<Component> component = std::nullopt) const;

  /// Replaces a parameter's values (shape and dtype must match).
  void assign(const std::string& name, const nc::Tensor& value);

 private:
  nc::DType dtype_;
  bool shape_only_;
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace agb::models
