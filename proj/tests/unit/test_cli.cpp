// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

// Runs the `agb` binary as a subprocess and checks exit status and output.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#ifndef AGB_CLI_PATH
#error "AGB_CLI_PATH must name the agb executable"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("agbfm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// `env` is prepended to the command line, e.g. "AGB_SEED=3".
Run agb(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && " + (env.empty() ? "" : "env " + env + " ") + "'" +
                          AGB_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto dir = scratch("usage");
  auto r = agb(dir, "--help");
  CHECK(r.status == 0);
  for (const char* sub : {"synth", "composite", "build-dataset", "pretrain", "finetune", "train-unet", "evaluate",
                          "report", "grad-check", "config"})
    CHECK_MESSAGE(r.out.find(sub) != std::string::npos, sub);
  CHECK(r.out.find("\"max_lr\"") != std::string::npos);

  r = agb(dir, "");
  CHECK(r.status == 2);
  CHECK(r.err.find("error=E_USAGE status=2") != std::string::npos);
  r = agb(dir, "evaluate --no-such-flag");
  CHECK(r.status == 2);
  r = agb(dir, "report --out x.svg");
  CHECK(r.status == 2);
  r = agb(dir, "grad-check --seeds 0");
  CHECK(r.status == 2);
}

TEST_CASE("config prints the effective values") {
  const auto dir = scratch("config");
  auto r = agb(dir, "config");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("\"seed\": 0") != std::string::npos);
  const auto at = r.out.find("config_hash=");
  REQUIRE(at != std::string::npos);
  const std::string base_hash = r.out.substr(at + 12, 16);

  r = agb(dir, "config", "AGB_SEED=42");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("\"seed\": 42") != std::string::npos);
  CHECK(r.out.find("config_hash=" + base_hash) == std::string::npos);

  std::ofstream(dir / "c.json") << "{\"seed\": 42}";
  auto from_file = agb(dir, "--config c.json config");
  REQUIRE(from_file.status == 0);
  CHECK(from_file.out == r.out);

  for (const char* bad : {"AGB_SEED=abc", "AGB_SEED=-1", "AGB_SEED=", "AGB_SEED=99999999999999999999999"}) {
    r = agb(dir, "config", bad);
    CHECK_MESSAGE(r.status == 2, bad);
    CHECK_MESSAGE(r.err.find("error=E_CONFIG") != std::string::npos, bad);
  }

  std::ofstream(dir / "bad.json") << "{\"sed\": 1}";
  r = agb(dir, "--config bad.json config");
  CHECK(r.status == 2);
  CHECK(r.err.find("error=E_CONFIG status=2") != std::string::npos);
  r = agb(dir, "--config absent.json config");
  CHECK(r.status == 2);
}

TEST_CASE("grad-check prints one line per seed") {
  const auto dir = scratch("grad");
  auto r = agb(dir, "grad-check --op pixel_shuffle --seeds 3");
  CHECK(r.status == 0);
  std::size_t pass_lines = 0;
  for (std::size_t p = r.out.find("PASS "); p != std::string::npos; p = r.out.find("PASS ", p + 1)) ++pass_lines;
  CHECK(pass_lines == 3);
  CHECK(r.out.find("grad-check: 0 failed") != std::string::npos);
  r = agb(dir, "grad-check --op bogus");
  CHECK(r.status == 2);
}

TEST_CASE("data errors exit 3 with a stable code") {
  const auto dir = scratch("data");
  std::ofstream(dir / "c.json")
      << R"({"seed": 2, "geodata": {"synth": {"width": 192, "height": 128, "n_points": 1500},)"
      << R"( "validation_fraction": 0.05}, "baseline": {"epochs": 1}, "paths": {"root": "run"}})";
  REQUIRE(agb(dir, "-q --config c.json synth").status == 0);
  REQUIRE(agb(dir, "-q --config c.json composite").status == 0);
  REQUIRE(agb(dir, "-q --config c.json build-dataset").status == 0);
  REQUIRE(agb(dir, "-q --config c.json train-unet").status == 0);
  CHECK(fs::exists(dir / "run" / "unet.ckpt"));

  auto r = agb(dir, "-q --config c.json evaluate --model run/unet.ckpt");
  CHECK(r.status == 3);
  CHECK(r.err.find("error=E_EMPTY_SPLIT status=3") != std::string::npos);

  r = agb(dir, "--config c.json composite --scenes nowhere --out c2");
  CHECK(r.status == 3);
  r = agb(dir, "--config c.json finetune --encoder run/unet.ckpt");
  CHECK(r.status == 3);
  CHECK(r.err.find("error=E_CHECKPOINT") != std::string::npos);
  r = agb(dir, "--config c.json finetune --region EC9");
  CHECK(r.status == 2);
}
