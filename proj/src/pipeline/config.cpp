// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/pipeline/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "agb/error.hpp"

namespace agb::pipeline {

using nlohmann::json;

namespace {

/// Reads one JSON object section, remembering which keys were consumed so
/// that leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw_config("'" + where_ + "' must be an object");
  }

  template <typename T>
  void take(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw_config("bad value for '" + where_ + "." + key + "': " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw_config("unknown key '" + where_ + "." + k + "'");
  }


 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void check_schedule(const training::ScheduleConfig& s, const std::string& where) {
  try {
    s.validate();
  } catch (const Error& e) {
    throw_config(where + ": " + e.what());
  }
}

void check_batch(int batch, const std::string& where) {
  if (batch < 1) throw_config(where + ".batch_size must be at least 1");
}

}  // namespace

std::filesystem::path PathsConfig::resolve(const std::string& entry) const {
  const std::filesystem::path p(entry);
  return p.is_absolute() ? p : std::filesystem::path(root) / p;
}

void RunConfig::validate() const {
  model.validate();
  const auto& s = geodata.synth;
  if (s.width < 1 || s.height < 1 || s.n_scenes < 1 || s.n_points < 0 || s.n_bumps < 0)
    throw_config("geodata.synth: sizes must be positive");
  if (s.n_ecoregions < 1 || s.n_ecoregions > 3) throw_config("geodata.synth.n_ecoregions must lie in 1..3");
  if (!(s.cloud_fraction >= 0 && s.cloud_fraction < 1) || !(s.nodata_fraction >= 0 && s.nodata_fraction < 1))
    throw_config("geodata.synth: cloud and nodata fractions must lie in [0, 1)");
  const auto& t = geodata.tiling;
  if (t.tile_size < 1 || t.stride < 1) throw_config("geodata.tiling: tile_size and stride must be positive");
  const int stride_total = model.swin.patch_size * 8;
  if (t.tile_size % stride_total != 0 || t.tile_size % model.simmim.mask_patch_size != 0)
    throw_config("geodata.tiling.tile_size must be a multiple of " + std::to_string(stride_total) + " and of " +
                 std::to_string(model.simmim.mask_patch_size) + " for this model");
  if (!(t.max_nodata_frac >= 0 && t.max_nodata_frac <= 1))
    throw_config("geodata.tiling.max_nodata_frac must lie in [0, 1]");
  if (!(geodata.validation_fraction >= 0 && geodata.validation_fraction < 1))
    throw_config("geodata.validation_fraction must lie in [0, 1)");
  check_schedule(pretrain.schedule(), "pretrain");
  check_schedule(finetune.schedule(), "finetune");
  check_batch(pretrain.batch_size, "pretrain");
  check_batch(finetune.batch_size, "finetune");
  check_batch(baseline.batch_size, "baseline");
  if (baseline.epochs < 1 || !(baseline.lr > 0)) throw_config("baseline: epochs and lr must be positive");
  for (double clip : {pretrain.grad_clip, finetune.grad_clip, baseline.grad_clip})
    if (!(clip >= 0)) throw_config("grad_clip must be non-negative");
  eval.bins.validate();
  for (const auto& f : eval.formats)
    if (f != "csv" && f != "json" && f != "svg") throw_config("eval.formats: unknown format '" + f + "'");
}

json RunConfig::to_json() const {
  const auto& s = geodata.synth;
  const auto& t = geodata.tiling;
  json j;
  j["seed"] = seed;
  j["geodata"] = {{"synth",
                   {{"width", s.width},
                    {"height", s.height},
                    {"n_scenes", s.n_scenes},
                    {"cloud_fraction", s.cloud_fraction},
                    {"nodata_fraction", s.nodata_fraction},
                    {"n_points", s.n_points},
                    {"n_ecoregions", s.n_ecoregions},
                    {"n_bumps", s.n_bumps},
                    {"agb_peak", s.agb_peak},
                    {"point_noise", s.point_noise},
                    {"band_noise", s.band_noise},
                    {"include_code4", s.include_code4}}},
                  {"tiling", {{"tile_size", t.tile_size}, {"stride", t.stride}, {"max_nodata_frac", t.max_nodata_frac}}},
                  {"validation_fraction", geodata.validation_fraction},
                  {"date_from", geodata.date_from},
                  {"date_to", geodata.date_to}};
  j["model"] = models::to_json(model);
  j["pretrain"] = {{"epochs", pretrain.epochs},
                   {"max_lr", pretrain.max_lr},
                   {"warmup_epochs", pretrain.warmup_epochs},
                   {"batch_size", pretrain.batch_size},
                   {"grad_clip", pretrain.grad_clip}};
  j["finetune"] = {{"epochs", finetune.epochs},
                   {"max_lr", finetune.max_lr},
                   {"warmup_epochs", finetune.warmup_epochs},
                   {"batch_size", finetune.batch_size},
                   {"grad_clip", finetune.grad_clip}};
  j["baseline"] = {{"epochs", baseline.epochs},
                   {"lr", baseline.lr},
                   {"batch_size", baseline.batch_size},
                   {"grad_clip", baseline.grad_clip}};
  j["eval"] = {{"bins", eval.bins.edges}, {"formats", eval.formats}};
  j["paths"] = {{"root", paths.root},         {"world", paths.world}, {"composite", paths.composite},
                {"data", paths.data},         {"encoder", paths.encoder}, {"gfm", paths.gfm},
                {"unet", paths.unet},         {"reports", paths.reports}, {"figure", paths.figure}};
  return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "config");
  root.take("seed", c.seed);

  if (const json* g = root.child("geodata")) {
    Section gs(*g, "geodata");
    if (const json* sj = gs.child("synth")) {
      Section s(*sj, "geodata.synth");
      auto& y = c.geodata.synth;
      s.take("width", y.width);
      s.take("height", y.height);
      s.take("n_scenes", y.n_scenes);
      s.take("cloud_fraction", y.cloud_fraction);
      s.take("nodata_fraction", y.nodata_fraction);
      s.take("n_points", y.n_points);
      s.take("n_ecoregions", y.n_ecoregions);
      s.take("n_bumps", y.n_bumps);
      s.take("agb_peak", y.agb_peak);
      s.take("point_noise", y.point_noise);
      s.take("band_noise", y.band_noise);
      s.take("include_code4", y.include_code4);
      s.finish();
    }
    if (const json* tj = gs.child("tiling")) {
      Section t(*tj, "geodata.tiling");
      t.take("tile_size", c.geodata.tiling.tile_size);
      c.geodata.tiling.stride = c.geodata.tiling.tile_size;
      t.take("stride", c.geodata.tiling.stride);
      t.take("max_nodata_frac", c.geodata.tiling.max_nodata_frac);
      t.finish();
    }
    gs.take("validation_fraction", c.geodata.validation_fraction);
    gs.take("date_from", c.geodata.date_from);
    gs.take("date_to", c.geodata.date_to);
    gs.finish();
  }
  if (const json* m = root.child("model")) {
    if (!m->is_object()) throw_config("'model' must be an object");
    c.model = models::model_config_from_json(*m);
  }
  if (const json* p = root.child("pretrain")) {
    Section s(*p, "pretrain");
    s.take("epochs", c.pretrain.epochs);
    s.take("max_lr", c.pretrain.max_lr);
    s.take("warmup_epochs", c.pretrain.warmup_epochs);
    s.take("batch_size", c.pretrain.batch_size);
    s.take("grad_clip", c.pretrain.grad_clip);
    s.finish();
  }
  if (const json* f = root.child("finetune")) {
    Section s(*f, "finetune");
    s.take("epochs", c.finetune.epochs);
    s.take("max_lr", c.finetune.max_lr);
    s.take("warmup_epochs", c.finetune.warmup_epochs);
    s.take("batch_size", c.finetune.batch_size);
    s.take("grad_clip", c.finetune.grad_clip);
    s.finish();
  }
  if (const json* b = root.child("baseline")) {
    Section s(*b, "baseline");
    s.take("epochs", c.baseline.epochs);
    s.take("lr", c.baseline.lr);
    s.take("batch_size", c.baseline.batch_size);
    s.take("grad_clip", c.baseline.grad_clip);
    s.finish();
  }
  if (const json* e = root.child("eval")) {
    Section s(*e, "eval");
    s.take("bins", c.eval.bins.edges);
    s.take("formats", c.eval.formats);
    s.finish();
  }
  if (const json* p = root.child("paths")) {
    Section s(*p, "paths");
    auto& ps = c.paths;
    s.take("root", ps.root);
    s.take("world", ps.world);
    s.take("composite", ps.composite);
    s.take("data", ps.data);
    s.take("encoder", ps.encoder);
    s.take("gfm", ps.gfm);
    s.take("unet", ps.unet);
    s.take("reports", ps.reports);
    s.take("figure", ps.figure);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw_config(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace agb::pipeline
