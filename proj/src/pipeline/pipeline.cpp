// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/pipeline/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "agb/error.hpp"
#include "agb/geodata/composite.hpp"
#include "agb/log.hpp"
#include "agb/models/checkpoint.hpp"
#include "agb/models/gradcheck.hpp"

namespace agb::pipeline {

namespace {

using TileList = std::vector<const geo::LabeledTile*>;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("E_IO", "cannot write " + path.string());
  out << text;
}

void write_history(const training::TrainHistory& h, const fs::path& ckpt, const ArtifactTags& tags) {
  write_text(with_suffix(ckpt, ".history.csv"), h.to_csv());
  auto j = h.to_json();
  j["config_hash"] = tags.config_hash;
  j["seed"] = tags.seed;
  write_text(with_suffix(ckpt, ".history.json"), j.dump(2) + "\n");
}

void save(const models::ModelBundle& m, const RunConfig& cfg, std::int64_t epoch, const nlohmann::json& extra,
          const fs::path& path, const nc::AdamState* optimizer) {
  ensure_parent(path);
  models::CheckpointMeta meta{m.kind, m.config, cfg.hash(), cfg.seed, epoch, extra};
  models::save_checkpoint(path, meta, *m.store, optimizer);
}

training::TrainHooks progress(const std::string& what, int epochs, const std::function<void(int)>& on_best) {
  training::TrainHooks hooks;
  hooks.on_epoch = [what, epochs](const training::EpochRecord& r) {
    if (r.val_loss)
      log::info(what, " epoch ", r.epoch + 1, "/", epochs, " lr=", r.lr, " train=", r.train_loss, " val=", *r.val_loss);
    else
      log::info(what, " epoch ", r.epoch + 1, "/", epochs, " lr=", r.lr, " train=", r.train_loss);
  };
  hooks.on_best = [on_best](const training::EpochRecord& r) { on_best(r.epoch); };
  return hooks;
}

std::string region_name(std::optional<geo::EcoRegion> region) { return region ? geo::to_string(*region) : "all"; }

TileList split_tiles(const geo::Dataset& ds, geo::Split split, std::optional<geo::EcoRegion> region) {
  return ds.select(split, region);
}

}  // namespace

void run_synth(const RunConfig& cfg, const fs::path& out_dir) {
  geo::SynthConfig sc = cfg.geodata.synth;
  sc.seed = cfg.seed;
  const auto world = geo::synth_generate(sc);
  geo::write_synth(world, out_dir, cfg.tags());
  log::info("synth: ", world.scenes.size(), " scenes, ", world.points.size(), " points -> ", out_dir.string());
}

void run_composite(const RunConfig& cfg, const fs::path& scenes_dir, const fs::path& out_base) {
  const auto scenes = geo::read_scenes(scenes_dir);
  geo::Raster composite = geo::median_composite(scenes);
  composite.tags = cfg.tags();
  ensure_parent(out_base);
  geo::write_raster(composite, out_base);
  log::info("composite: ", scenes.size(), " scenes -> ", out_base.string());
}

geo::DatasetManifest run_build_dataset(const RunConfig& cfg, const fs::path& composite, const fs::path& points,
                                       const fs::path& ecomap, const fs::path& out_dir) {
  const geo::Raster image = geo::read_raster(composite);
  const geo::Raster eco = geo::read_raster(ecomap);
  const auto pts = geo::read_points_csv(points);
  geo::DatasetOptions opts;
  opts.tiling = cfg.geodata.tiling;
  opts.validation_fraction = cfg.geodata.validation_fraction;
  opts.seed = cfg.seed;
  opts.date_from = cfg.geodata.date_from;
  opts.date_to = cfg.geodata.date_to;
  auto manifest = geo::build_dataset(image, pts, eco, opts, out_dir, cfg.tags());
  log::info("build-dataset: ", manifest.count(geo::Split::finetune), " fine-tune and ",
            manifest.count(geo::Split::validation), " validation tiles -> ", out_dir.string());
  return manifest;
}

void run_pretrain(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out) {
  const auto ds = geo::load_dataset(data_dir);
  TileList tiles;
  for (const auto& t : ds.tiles) tiles.push_back(&t);
  auto model = models::make_model(models::ModelKind::simmim, cfg.model, cfg.seed);
  training::PretrainConfig pc = cfg.pretrain;
  pc.seed = cfg.seed;
  const nlohmann::json extra{{"dataset_config_hash", ds.manifest.tags.config_hash}, {"tiles", tiles.size()}};
  const auto hooks = progress("pretrain", pc.epochs, [&](int epoch) {
    save(model, cfg, epoch + 1, extra, with_suffix(out, ".best"), nullptr);
  });
  const auto result = training::train_pretrain(model, tiles, pc, hooks);
  save(model, cfg, pc.epochs, extra, out, &result.optimizer);
  write_history(result.history, out, cfg.tags());
  const auto& rec = result.history.records;
  log::info("pretrain: loss ", rec.front().train_loss, " -> ", rec.back().train_loss, " -> ", out.string());
}

void run_finetune(const RunConfig& cfg, const fs::path& encoder, const fs::path& data_dir, const fs::path& out,
                  std::optional<geo::EcoRegion> region) {
  const auto ckpt = models::read_checkpoint(encoder);
  if (ckpt.meta.kind != models::ModelKind::simmim)
    throw_data("E_CHECKPOINT", encoder.string() + ": expected a pre-trained simmim checkpoint, found " +
                                   models::to_string(ckpt.meta.kind));
  if (!(ckpt.meta.config.swin == cfg.model.swin))
    log::warn("finetune: encoder architecture differs from the config; using the checkpoint's");
  models::ModelConfig mc = cfg.model;
  mc.swin = ckpt.meta.config.swin;

  const auto ds = geo::load_dataset(data_dir);
  const auto train = split_tiles(ds, geo::Split::finetune, region);
  const auto val = split_tiles(ds, geo::Split::validation, region);
  if (train.empty()) throw_data("E_EMPTY_SPLIT", "finetune: no fine-tune tiles for region " + region_name(region));

  auto model = models::make_model(models::ModelKind::gfm, mc, cfg.seed);
  models::load_params(ckpt, *model.store, "encoder.");
  training::FinetuneConfig fc = cfg.finetune;
  fc.seed = cfg.seed;
  const nlohmann::json extra{{"encoder_config_hash", ckpt.meta.config_hash},
                             {"encoder_checksum", hex64(model.store->checksum(models::Component::encoder))},
                             {"dataset_config_hash", ds.manifest.tags.config_hash},
                             {"region", region_name(region)}};
  const auto hooks = progress("finetune", fc.epochs, [&](int epoch) {
    save(model, cfg, epoch + 1, extra, with_suffix(out, ".best"), nullptr);
  });
  const auto result = training::train_finetune(model, train, val, fc, hooks);
  save(model, cfg, fc.epochs, extra, out, &result.optimizer);
  write_history(result.history, out, cfg.tags());
  log::info("finetune: best epoch ", result.best_epoch + 1, " -> ", out.string());
}

void run_train_unet(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out,
                    std::optional<geo::EcoRegion> region) {
  const auto ds = geo::load_dataset(data_dir);
  const auto train = split_tiles(ds, geo::Split::finetune, region);
  const auto val = split_tiles(ds, geo::Split::validation, region);
  if (train.empty()) throw_data("E_EMPTY_SPLIT", "train-unet: no fine-tune tiles for region " + region_name(region));
  auto model = models::make_model(models::ModelKind::unet, cfg.model, cfg.seed);
  training::BaselineConfig bc = cfg.baseline;
  bc.seed = cfg.seed;
  const nlohmann::json extra{{"dataset_config_hash", ds.manifest.tags.config_hash}, {"region", region_name(region)}};
  const auto hooks = progress("train-unet", bc.epochs, [&](int epoch) {
    save(model, cfg, epoch + 1, extra, with_suffix(out, ".best"), nullptr);
  });
  const auto result = training::train_baseline(model, train, val, bc, hooks);
  save(model, cfg, bc.epochs, extra, out, &result.optimizer);
  write_history(result.history, out, cfg.tags());
  log::info("train-unet: best epoch ", result.best_epoch + 1, " -> ", out.string());
}

ModelSpec ModelSpec::parse(const std::string& text) {
  ModelSpec spec;
  if (text.empty()) throw_config("--model: empty model list");
  if (text.find('=') == std::string::npos) {
    spec.single = fs::path(text);
    return spec;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw_config("--model: expected REGION=CHECKPOINT, got '" + item + "'");
    const auto region = geo::parse_ecoregion(item.substr(0, eq));
    if (!region || item.substr(0, 2) != "EC") throw_config("--model: unknown eco-region '" + item.substr(0, eq) + "'");
    if (!spec.per_region.emplace(*region, fs::path(item.substr(eq + 1))).second)
      throw_config("--model: eco-region " + item.substr(0, eq) + " given twice");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return spec;
}

eval::EvalReport run_evaluate(const RunConfig& cfg, const ModelSpec& spec, const fs::path& data_dir,
                              const fs::path& out_base, const EvaluateOptions& opts) {
  const eval::BinSpec bins = opts.bins ? *opts.bins : cfg.eval.bins;
  const auto& formats = opts.formats.empty() ? cfg.eval.formats : opts.formats;
  for (const auto& f : formats)
    if (f != "csv" && f != "json" && f != "svg") throw_config("evaluate: unknown format '" + f + "'");
  const auto ds = geo::load_dataset(data_dir);

  // Validation tiles grouped by the checkpoint that predicts them.
  std::map<fs::path, TileList> work;
  for (std::size_t i = 0; i < ds.tiles.size(); ++i) {
    if (ds.entry(i).split != geo::Split::validation) continue;
    if (spec.single) {
      work[*spec.single].push_back(&ds.tiles[i]);
      continue;
    }
    auto it = spec.per_region.find(ds.entry(i).ecoregion);
    if (it == spec.per_region.end())
      throw_config("evaluate: no model given for eco-region " + geo::to_string(ds.entry(i).ecoregion));
    work[it->second].push_back(&ds.tiles[i]);
  }
  if (work.empty()) throw_data("E_EMPTY_SPLIT", "evaluate: the validation split of " + data_dir.string() + " is empty");

  std::vector<eval::TilePrediction> preds;
  std::set<std::string> kinds;
  for (const auto& [path, tiles] : work) {
    const auto model = models::model_from_checkpoint(models::read_checkpoint(path));
    if (model.kind == models::ModelKind::simmim)
      throw_data("E_CHECKPOINT", path.string() + ": a simmim checkpoint cannot predict AGB");
    kinds.insert(models::to_string(model.kind));
    const auto out = training::predict_tiles(model, tiles);
    for (std::size_t k = 0; k < tiles.size(); ++k) preds.push_back({tiles[k]->id, out[k]});
  }
  std::string name = opts.name;
  if (name.empty())
    for (const auto& k : kinds) name += (name.empty() ? "" : "+") + k;
  const std::string dataset_id = fs::path(data_dir).lexically_normal().filename().string();
  const auto report = eval::stratified_report(preds, ds, bins, name, dataset_id, cfg.tags());
  ensure_parent(out_base);
  for (const auto& f : formats) eval::write_report(report, out_base, f);
  log::info("evaluate: ", name, " overall RMSE ", report.overall.rmse ? *report.overall.rmse : 0.0, " over ",
            report.overall.n, " pixels -> ", out_base.string());
  return report;
}

void run_report(const std::vector<fs::path>& inputs, const fs::path& out_svg) {
  if (inputs.empty()) throw_config("report: no input reports");
  std::vector<eval::EvalReport> reports;
  for (const auto& p : inputs) reports.push_back(eval::read_report(p));
  write_text(out_svg, eval::render_svg(reports));
  log::info("report: ", reports.size(), " reports -> ", out_svg.string());
}

std::vector<CheckLine> run_grad_check(const std::string& op, const std::string& model, int seeds,
                                      const std::function<void(const CheckLine&)>& on_line) {
  if (seeds < 1) throw_config("grad-check: --seeds must be at least 1");
  std::vector<std::string> prims, paths;
  const auto all_prims = nc::primitive_check_names();
  const auto all_models = models::model_check_names();
  auto known = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  if (!op.empty()) {
    if (op == "all") prims = all_prims;
    else if (known(all_prims, op)) prims = {op};
    else throw_config("grad-check: unknown primitive '" + op + "'");
  }
  if (!model.empty()) {
    if (model == "all" || model == "toy") paths = all_models;
    else if (known(all_models, model)) paths = {model};
    else throw_config("grad-check: unknown model path '" + model + "' (expected toy or one of the model checks)");
  }
  if (op.empty() && model.empty()) {
    prims = all_prims;
    paths = all_models;
  }
  std::vector<CheckLine> lines;
  auto emit = [&](CheckLine line) {
    if (on_line) on_line(line);
    lines.push_back(std::move(line));
  };
  for (const auto& name : prims)
    for (int s = 0; s < seeds; ++s)
      emit({name, static_cast<std::uint64_t>(s), nc::run_primitive_check(name, static_cast<std::uint64_t>(s))});
  for (const auto& name : paths)
    for (int s = 0; s < seeds; ++s)
      emit({name, static_cast<std::uint64_t>(s), models::run_model_check(name, static_cast<std::uint64_t>(s))});
  return lines;
}

}  // namespace agb::pipeline
