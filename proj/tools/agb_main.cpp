// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

// `agb`: one binary with a subcommand per pipeline stage. Everything goes
// through the C interface in agb/agb.h.

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "agb/agb.h"

namespace {

/// Prints the machine-readable line, then the human detail.
int report_failure(agb_status status) {
  const int code = agb_exit_code(status);
  std::fprintf(stderr, "agb: error=%s status=%d\n", agb_last_error_code(), code);
  std::fprintf(stderr, "agb: %s\n", agb_last_error_message());
  return code;
}

int usage_failure(const std::string& code, const std::string& message) {
  std::fprintf(stderr, "agb: error=%s status=2\n", code.c_str());
  std::fprintf(stderr, "agb: %s\n", message.c_str());
  return 2;
}

const char* opt(const std::optional<std::string>& s) { return s ? s->c_str() : nullptr; }

std::string default_config_text() {
  agb_config* cfg = nullptr;
  char* text = nullptr;
  std::string out;
  if (agb_config_new(&cfg) == AGB_OK && agb_config_json(cfg, 2, &text) == AGB_OK) out = text;
  agb_string_free(text);
  agb_config_free(cfg);
  return out;
}

struct GradCheckTally {
  bool quiet = false;
};

void print_check(const char* name, std::uint64_t seed, double err, int passed, void* user) {
  const auto* tally = static_cast<const GradCheckTally*>(user);
  if (tally->quiet && passed) return;
  std::printf("%s %-24s seed=%-3llu max_rel_error=%.3e\n", passed ? "PASS" : "FAIL", name,
              static_cast<unsigned long long>(seed), err);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agbfm: sparse-label above-ground biomass regression pipeline (version " +
               std::string(agb_version()) + ")"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Exit status: 0 success, 1 internal error or failed grad-check, 2 config or usage error, 3 data error, "
      "4 numeric fault.\n"
      "Environment: AGB_SEED overrides the config seed.\n\n"
      "Config defaults (JSON; every key optional, unknown keys rejected). The training defaults follow the\n"
      "reference recipe: fine-tune max lr 2e-4 with a 10-epoch warm-up and cosine decay over 100 epochs,\n"
      "U-Net constant lr 0.01 with batch 128, Adam throughout, masked RMSE loss. Bins are left-closed\n"
      "[lo, hi) in Mg/ha with an open last bin.\n" +
      default_config_text());

  std::string config_path;
  int threads = 0;
  bool quiet = false, verbose = false;
  app.add_option("--config", config_path, "Run config JSON (default: built-in defaults)");
  app.add_option("--threads", threads, "Worker thread cap (default: available cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet,-q", quiet, "Only print errors");
  app.add_flag("--verbose,-v", verbose, "Print debug logs");

  std::optional<std::string> out, scenes, composite, points, ecomap, data, encoder, region, model, bins, name, format,
      op;
  std::string inputs;
  int seeds = 10;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic world: scenes, points CSV, eco-map, truth raster");
  synth->add_option("--out", out, "Output directory (default: paths.root/paths.world)");

  auto* comp = app.add_subcommand("composite", "Cloud-free per-pixel median composite of a scene directory");
  comp->add_option("--scenes", scenes, "Scene directory (default: <world>/scenes)");
  comp->add_option("--out", out, "Output raster base path (default: paths.root/paths.composite)");

  auto* build = app.add_subcommand("build-dataset", "Rasterize labels, cut tiles, split and write a dataset");
  build->add_option("--composite", composite, "Composite raster (default: paths.composite)");
  build->add_option("--points", points, "Points CSV (default: <world>/points.csv)");
  build->add_option("--ecomap", ecomap, "Eco-region raster (default: <world>/ecomap)");
  build->add_option("--out", out, "Dataset directory (default: paths.data)");

  auto* pre = app.add_subcommand("pretrain", "SimMIM pre-training of the encoder (default 50 epochs, max lr 1e-4)");
  pre->add_option("--data", data, "Dataset directory (default: paths.data)");
  pre->add_option("--out", out, "Encoder checkpoint (default: paths.encoder)");

  auto* fine = app.add_subcommand("finetune", "Train the regression head on the frozen encoder");
  fine->add_option("--encoder", encoder, "Pre-trained checkpoint (default: paths.encoder)");
  fine->add_option("--data", data, "Dataset directory (default: paths.data)");
  fine->add_option("--region", region, "Restrict both splits to EC1, EC2 or EC3 (default: all)");
  fine->add_option("--out", out, "Model checkpoint (default: paths.gfm); the best epoch goes to <out>.best");

  auto* unet = app.add_subcommand("train-unet", "Train the U-Net baseline (constant lr 0.01, batch 128)");
  unet->add_option("--data", data, "Dataset directory (default: paths.data)");
  unet->add_option("--region", region, "Restrict both splits to EC1, EC2 or EC3 (default: all)");
  unet->add_option("--out", out, "Model checkpoint (default: paths.unet); the best epoch goes to <out>.best");

  auto* evaluate = app.add_subcommand("evaluate", "Bin-wise, eco-region stratified RMSE on the validation split");
  evaluate->add_option("--model", model, "Checkpoint, or EC1=a.ckpt,EC2=b.ckpt,EC3=c.ckpt (default: paths.gfm)");
  evaluate->add_option("--data", data, "Dataset directory (default: paths.data)");
  evaluate->add_option("--bins", bins, "Bin lower edges, e.g. 0,50,100,200,300,400 (default: eval.bins)");
  evaluate->add_option("--name", name, "Model id in the report (default: the checkpoint's model kind)");
  evaluate->add_option("--format", format, "Comma list of csv, json, svg (default: eval.formats)");
  evaluate->add_option("--out", out, "Report base path (default: paths.reports/<name>)");

  auto* rep = app.add_subcommand("report", "Grouped bar chart comparing reports, one panel per stratum");
  rep->add_option("--inputs", inputs, "Comma list of report .csv or .json files")->required();
  rep->add_option("--out", out, "SVG output path")->required();

  auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient suite; nonzero exit on failure");
  grad->add_option("--op", op, "Primitive name, or 'all'");
  grad->add_option("--model", model, "Toy model path (swin_block, simmim, head, unet) or 'toy' for all");
  grad->add_option("--seeds", seeds, "Seeds per check (default: 10)")->check(CLI::PositiveNumber);

  auto* show = app.add_subcommand("config", "Print the effective config with defaults filled in, and its hash");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_failure("E_USAGE", e.what());
  }

  agb_set_log_level(quiet ? AGB_LOG_ERROR : verbose ? AGB_LOG_DEBUG : AGB_LOG_INFO);
  agb_set_threads(threads);

  agb_config* cfg = nullptr;
  agb_status st = config_path.empty() ? agb_config_new(&cfg) : agb_config_load(config_path.c_str(), &cfg);
  if (st != AGB_OK) return report_failure(st);
  if (const char* env = std::getenv("AGB_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*env == '\0' || *env == '-' || *end != '\0' || errno == ERANGE) {
      agb_config_free(cfg);
      return usage_failure("E_CONFIG", std::string("AGB_SEED is not an unsigned integer: '") + env + "'");
    }
    agb_config_set_seed(cfg, v);
  }

  int failures = 0;
  if (*synth) {
    st = agb_synth(cfg, opt(out));
  } else if (*comp) {
    st = agb_composite(cfg, opt(scenes), opt(out));
  } else if (*build) {
    st = agb_build_dataset(cfg, opt(composite), opt(points), opt(ecomap), opt(out));
  } else if (*pre) {
    st = agb_pretrain(cfg, opt(data), opt(out));
  } else if (*fine) {
    st = agb_finetune(cfg, opt(encoder), opt(data), opt(region), opt(out));
  } else if (*unet) {
    st = agb_train_unet(cfg, opt(data), opt(region), opt(out));
  } else if (*evaluate) {
    st = agb_evaluate(cfg, opt(model), opt(data), opt(bins), opt(name), opt(format), opt(out));
  } else if (*rep) {
    st = agb_render_report(inputs.c_str(), out->c_str());
  } else if (*grad) {
    GradCheckTally tally{quiet};
    st = agb_grad_check(opt(op), opt(model), seeds, print_check, &tally, &failures);
    if (st == AGB_OK) {
      std::printf("grad-check: %d failed\n", failures);
    }
  } else if (*show) {
    char* text = nullptr;
    char hash[17];
    st = agb_config_json(cfg, 2, &text);
    if (st == AGB_OK) st = agb_config_hash(cfg, hash);
    if (st == AGB_OK) std::printf("%s\nconfig_hash=%s\n", text, hash);
    agb_string_free(text);
  }
  agb_config_free(cfg);
  if (st != AGB_OK) return report_failure(st);
  return failures > 0 ? 1 : 0;
}
