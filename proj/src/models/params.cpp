// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/models/params.hpp"

#include <cmath>

#include <cstring>

#include "agb/error.hpp"

namespace agb::models {

const char* to_string(Component c) { return c == Component::encoder ? "encoder" : "decoder"; }

nc::Tensor ParamStore::add(const std::string& name, nc::Shape shape, Component component, Init init,
                           nc::Prng& rng) {
  if (index_.count(name)) throw_invalid("duplicate parameter name " + name);
  ParamEntry e;
  e.name = name;
  e.component = component;
  e.shape = shape;
  if (!shape_only_) {
    std::vector<double> v(static_cast<std::size_t>(nc::numel(shape)));
    switch (init) {
      case Init::trunc_normal:
        for (auto& x : v) x = rng.truncated_normal(0.02);
        break;
      case Init::he_normal: {
        const double fan_in = shape.empty() ? 1.0 : static_cast<double>(nc::numel(shape) / shape[0]);
        const double sd = std::sqrt(2.0 / fan_in);
        for (auto& x : v) x = rng.truncated_normal(sd);
        break;
      }
      case Init::zeros:
        break;
      case Init::ones:
        std::fill(v.begin(), v.end(), 1.0);
        break;
    }
    e.value = nc::Tensor::from(shape, v, dtype_);
    e.value.set_requires_grad(true);
  }
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
  return entries_.back().value;
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw_invalid("unknown parameter " + name);
  return entries_[it->second];
}

std::int64_t ParamStore::count(bool trainable_only) const {
  std::int64_t n = 0;
  for (const auto& e : entries_)
    if (!trainable_only || e.trainable) n += nc::numel(e.shape);
  return n;
}

std::int64_t ParamStore::count(Component component) const {
  std::int64_t n = 0;
  for (const auto& e : entries_)
    if (e.component == component) n += nc::numel(e.shape);
  return n;
}

void ParamStore::freeze(Component component) {
  for (auto& e : entries_) {
    if (e.component != component) continue;
    e.trainable = false;
    if (e.value.defined()) e.value.set_requires_grad(false);
  }
}

std::vector<nc::Tensor> ParamStore::trainable() const {
  std::vector<nc::Tensor> out;
  for (const auto& e : entries_)
    if (e.trainable) out.push_back(e.value);
  return out;
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.trainable) out.push_back(e.name);
  return out;
}

namespace {

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

}  // namespace

std::uint64_t ParamStore::checksum(std::optional<Component> component) const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& e : entries_) {
    if (component && e.component != *component) continue;
    fnv(h, e.name.data(), e.name.size());
    for (auto d : e.shape) fnv(h, &d, sizeof d);
    if (!e.value.defined()) continue;
    nc::dispatch(e.value.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto d = e.value.template data<T>();
      fnv(h, d.data(), d.size() * sizeof(T));
    });
  }
  return h;
}

void ParamStore::assign(const std::string& name, const nc::Tensor& value) {
  auto it = index_.find(name);
  if (it == index_.end()) throw_invalid("unknown parameter " + name);
  auto& e = entries_[it->second];
  if (shape_only_) throw_invalid("cannot assign values in a shape-only store");
  if (value.shape() != e.shape) throw_invalid("shape mismatch assigning " + name);
  nc::Tensor v = value.to(dtype_);
  nc::dispatch(dtype_, [&](auto tag) {
    using T = decltype(tag);
    auto src = v.template data<T>();
    auto dst = e.value.template mutable_leaf_data<T>();
    std::copy(src.begin(), src.end(), dst.begin());
  });
}

}  // namespace agb::models
