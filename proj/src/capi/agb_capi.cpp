// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/agb.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agb/error.hpp"
#include "agb/log.hpp"
#include "agb/parallel.hpp"
#include "agb/pipeline/pipeline.hpp"

struct agb_config {
  agb::pipeline::RunConfig cfg;
};

struct agb_report {
  agb::eval::EvalReport report;
};

namespace {

namespace fs = std::filesystem;
using agb::pipeline::RunConfig;

thread_local std::string t_code;
thread_local std::string t_message;

agb_status status_of(agb::ErrorKind kind) {
  switch (kind) {
    case agb::ErrorKind::config:
      return AGB_ERR_CONFIG;
    case agb::ErrorKind::data:
      return AGB_ERR_DATA;
    case agb::ErrorKind::numeric:
      return AGB_ERR_NUMERIC;
    case agb::ErrorKind::invalid_argument:
      return AGB_ERR_INVALID_ARGUMENT;
    case agb::ErrorKind::internal:
      break;
  }
  return AGB_ERR_INTERNAL;
}

agb_status fail(agb_status status, const std::string& code, const std::string& message) {
  t_code = code;
  t_message = message;
  return status;
}

/// Runs `body`, translating exceptions into a status plus the thread's
/// last-error record.
template <typename F>
agb_status guarded(F&& body) {
  try {
    body();
    return AGB_OK;
  } catch (const agb::Error& e) {
    return fail(status_of(e.kind()), e.code(), e.what());
  } catch (const std::bad_alloc&) {
    return fail(AGB_ERR_INTERNAL, "E_OUT_OF_MEMORY", "out of memory");
  } catch (const fs::filesystem_error& e) {
    return fail(AGB_ERR_DATA, "E_IO", e.what());
  } catch (const std::exception& e) {
    return fail(AGB_ERR_INTERNAL, "E_INTERNAL", e.what());
  } catch (...) {
    return fail(AGB_ERR_INTERNAL, "E_INTERNAL", "unknown exception");
  }
}

void require(const void* p, const char* what) {
  if (!p) agb::throw_invalid(std::string(what) + " must not be NULL");
}

fs::path or_default(const char* given, const RunConfig& cfg, const std::string& entry) {
  return given ? fs::path(given) : cfg.paths.resolve(entry);
}

std::optional<agb::geo::EcoRegion> region_arg(const char* region) {
  if (!region || !*region || std::string(region) == "all") return std::nullopt;
  const auto r = agb::geo::parse_ecoregion(region);
  if (!r || std::string(region).rfind("EC", 0) != 0)
    agb::throw_config(std::string("unknown eco-region '") + region + "' (expected EC1, EC2 or EC3)");
  return r;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* agb_version(void) { return "0.1.0"; }

int agb_exit_code(agb_status status) {
  switch (status) {
    case AGB_OK:
      return 0;
    case AGB_ERR_CONFIG:
      return 2;
    case AGB_ERR_DATA:
    case AGB_ERR_INVALID_ARGUMENT:
      return 3;
    case AGB_ERR_NUMERIC:
      return 4;
    case AGB_ERR_INTERNAL:
      break;
  }
  return 1;
}

const char* agb_last_error_code(void) { return t_code.c_str(); }
const char* agb_last_error_message(void) { return t_message.c_str(); }

void agb_string_free(char* s) { std::free(s); }

void agb_set_log_level(agb_log_level level) {
  const int l = std::clamp(static_cast<int>(level), 0, 4);
  agb::log::set_level(static_cast<agb::log::Level>(l));
}

void agb_set_threads(int n) { agb::set_worker_threads(n < 0 ? 0 : n); }

agb_status agb_config_new(agb_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new agb_config{};
  });
}

agb_status agb_config_load(const char* path, agb_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new agb_config{agb::pipeline::load_config(path)};
  });
}

agb_status agb_config_parse(const char* json, agb_config** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      agb::throw_config(std::string("config: ") + e.what());
    }
    *out = new agb_config{agb::pipeline::config_from_json(j)};
  });
}

void agb_config_free(agb_config* cfg) { delete cfg; }

agb_status agb_config_set_seed(agb_config* cfg, uint64_t seed) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.seed = seed;
  });
}

agb_status agb_config_seed(const agb_config* cfg, uint64_t* seed) {
  return guarded([&] {
    require(cfg, "cfg");
    require(seed, "seed");
    *seed = cfg->cfg.seed;
  });
}

agb_status agb_config_json(const agb_config* cfg, int indent, char** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = dup(indent < 0 ? cfg->cfg.canonical() : cfg->cfg.to_json().dump(indent));
  });
}

agb_status agb_config_hash(const agb_config* cfg, char out[17]) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    const std::string h = cfg->cfg.hash();
    std::memcpy(out, h.c_str(), 17);
  });
}

agb_status agb_synth(const agb_config* cfg, const char* out_dir) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->cfg;
    agb::pipeline::run_synth(c, or_default(out_dir, c, c.paths.world));
  });
}

agb_status agb_composite(const agb_config* cfg, const char* scenes_dir, const char* out_base) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->cfg;
    const fs::path scenes = scenes_dir ? fs::path(scenes_dir) : c.paths.resolve(c.paths.world) / "scenes";
    agb::pipeline::run_composite(c, scenes, or_default(out_base, c, c.paths.composite));
  });
}

agb_status agb_build_dataset(const agb_config* cfg, const char* composite, const char* points, const char* ecomap,
                             const char* out_dir) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->cfg;
    const fs::path world = c.paths.resolve(c.paths.world);
    agb::pipeline::run_build_dataset(c, or_default(composite, c, c.paths.composite),
                                     points ? fs::path(points) : world / "points.csv",
                                     ecomap ? fs::path(ecomap) : world / "ecomap",
                                     or_default(out_dir, c, c.paths.data));
  });
}

agb_status agb_pretrain(const agb_config* cfg, const char* data_dir, const char* out_ckpt) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->cfg;
    agb::pipeline::run_pretrain(c, or_default(data_dir, c, c.paths.data), or_default(out_ckpt, c, c.paths.encoder));
  });
}

agb_status agb_finetune(const agb_config* cfg, const char* encoder, const char* data_dir, const char* region,
                        const char* out_ckpt) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->cfg;
    agb::pipeline::run_finetune(c, or_default(encoder, c, c.paths.encoder), or_default(data_dir, c, c.paths.data),
                                or_default(out_ckpt, c, c.paths.gfm), region_arg(region));
  });
}

agb_status agb_train_unet(const agb_config* cfg, const char* data_dir, const char* region, const char* out_ckpt) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->cfg;
    agb::pipeline::run_train_unet(c, or_default(data_dir, c, c.paths.data), or_default(out_ckpt, c, c.paths.unet),
                                  region_arg(region));
  });
}

agb_status agb_evaluate(const agb_config* cfg, const char* models, const char* data_dir, const char* bins,
                        const char* name, const char* formats, const char* out_base) {
  return guarded([&] {
    require(cfg, "cfg");
    const auto& c = cfg->cfg;
    const auto spec =
        agb::pipeline::ModelSpec::parse(models ? std::string(models) : c.paths.resolve(c.paths.gfm).string());
    agb::pipeline::EvaluateOptions opts;
    if (bins) opts.bins = agb::eval::BinSpec::parse(bins);
    if (name) opts.name = name;
    if (formats) {
      opts.formats = split_list(formats);
      if (opts.formats.empty()) agb::throw_config("evaluate: empty format list");
    }
    fs::path out;
    if (out_base) {
      out = out_base;
    } else {
      std::string stem = opts.name;
      if (stem.empty()) stem = spec.single ? spec.single->stem().string() : "per_region";
      out = c.paths.resolve(c.paths.reports) / stem;
    }
    agb::pipeline::run_evaluate(c, spec, or_default(data_dir, c, c.paths.data), out, opts);
  });
}

agb_status agb_render_report(const char* inputs, const char* out_svg) {
  return guarded([&] {
    require(inputs, "inputs");
    require(out_svg, "out_svg");
    std::vector<fs::path> paths;
    for (const auto& s : split_list(inputs)) paths.emplace_back(s);
    agb::pipeline::run_report(paths, out_svg);
  });
}

agb_status agb_grad_check(const char* op, const char* model, int seeds, agb_check_callback on_check, void* user,
                          int* failures) {
  return guarded([&] {
    int failed = 0;
    agb::pipeline::run_grad_check(op ? op : "", model ? model : "", seeds, [&](const agb::pipeline::CheckLine& l) {
      if (!l.report.passed) ++failed;
      if (on_check) on_check(l.name.c_str(), l.seed, l.report.max_rel_error, l.report.passed ? 1 : 0, user);
    });
    if (failures) *failures = failed;
  });
}

agb_status agb_report_read(const char* path, agb_report** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new agb_report{agb::eval::read_report(path)};
  });
}

void agb_report_free(agb_report* report) { delete report; }

int agb_report_bin_count(const agb_report* report) {
  return report ? static_cast<int>(report->report.bins.size()) : 0;
}

int agb_report_stratum_count(const agb_report* report) {
  return report ? 1 + static_cast<int>(report->report.regions.size()) : 0;
}

const char* agb_report_stratum_name(const agb_report* report, int index) {
  if (!report || index < 0 || index > static_cast<int>(report->report.regions.size())) return nullptr;
  if (index == 0) return report->report.overall.name.c_str();
  return report->report.regions[static_cast<std::size_t>(index - 1)].name.c_str();
}

agb_status agb_report_value(const agb_report* report, const char* stratum, int bin, int64_t* n, double* rmse,
                            double* lo, double* hi) {
  return guarded([&] {
    require(report, "report");
    require(stratum, "stratum");
    const auto* s = report->report.stratum(stratum);
    if (!s) agb::throw_invalid(std::string("report has no stratum '") + stratum + "'");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (bin < 0) {
      if (n) *n = s->n;
      if (rmse) *rmse = s->rmse ? *s->rmse : nan;
      if (lo) *lo = s->bins.empty() ? 0.0 : s->bins.front().lo;
      if (hi) *hi = std::numeric_limits<double>::infinity();
      return;
    }
    if (bin >= static_cast<int>(s->bins.size())) agb::throw_invalid("bin index out of range");
    const auto& b = s->bins[static_cast<std::size_t>(bin)];
    if (n) *n = b.n;
    if (rmse) *rmse = b.rmse ? *b.rmse : nan;
    if (lo) *lo = b.lo;
    if (hi) *hi = b.hi;
  });
}

}  // extern "C"
