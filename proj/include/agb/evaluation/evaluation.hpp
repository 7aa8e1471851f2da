// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "agb/artifact.hpp"
#include "agb/geodata/dataset.hpp"

namespace agb::eval {

/// Left-closed, right-open AGB intervals keyed by the ground-truth label.
/// `edges` lists the lower bounds; the last bin is open above.
struct BinSpec {
  std::vector<double> edges{0.0, 50.0, 100.0, 200.0, 300.0, 400.0};

  /// Parses "0,50,100" style lists.
  static BinSpec parse(const std::string& text);
  void validate() const;
  std::size_t size() const { return edges.size(); }
  double lo(std::size_t bin) const { return edges.at(bin); }
  /// +inf for the last bin.
  double hi(std::size_t bin) const;
  /// "0-50", ..., "400+".
  std::string label(std::size_t bin) const;
  /// Bin holding `value`, or -1 when value lies below the first edge.
  int find(double value) const;
};

struct BinStat {
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t n = 0;
  /// Absent when n == 0.
  std::optional<double> rmse;
};

struct Stratum {
  std::string name;
  std::int64_t n = 0;
  std::optional<double> rmse;
  std::vector<BinStat> bins;
};

/// Squared-error sums per bin; merging accumulators commutes with binning.
class BinAccumulator {
 public:
  explicit BinAccumulator(BinSpec bins);

  /// Pixels with valid == 0 are never read.
  void add(std::span<const float> pred, std::span<const float> label, std::span<const std::uint8_t> valid);
  void merge(const BinAccumulator& other);
  Stratum finish(const std::string& name) const;
  std::int64_t count() const;

 private:
  BinSpec bins_;
  std::vector<double> sse_;
  std::vector<std::int64_t> n_;
};

/// Per-bin and overall pixel-pooled RMSE. Throws E_EMPTY_LABELS without any
/// valid pixel.
Stratum binwise_rmse(std::span<const float> pred, std::span<const float> label, std::span<const std::uint8_t> valid,
                     const BinSpec& bins, const std::string& name = "all");

struct EvalReport {
  std::string model_id;
  std::string dataset_id;
  ArtifactTags tags;
  BinSpec bins;
  Stratum overall;
  /// One entry per eco-region present, in region order.
  std::vector<Stratum> regions;

  const Stratum* stratum(const std::string& name) const;
};

struct TilePrediction {
  std::string tile_id;
  std::vector<float> pred;
};

/// Evaluates the validation split. Every validation tile needs a
/// prediction; tiles are visited in id order so the result does not depend
/// on the input order.
EvalReport stratified_report(const std::vector<TilePrediction>& predictions, const geo::Dataset& data,
                             const BinSpec& bins, const std::string& model_id, const std::string& dataset_id,
                             const ArtifactTags& tags);

std::string report_to_csv(const EvalReport& report);
EvalReport report_from_csv(const std::string& text);
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
/// Figure-style grouped bar chart: one panel per stratum, one group per bin,
/// one bar per report.
std::string render_svg(const std::vector<EvalReport>& reports);

/// Writes `<base>.<format>` for format in {csv, json, svg}.
void write_report(const EvalReport& report, const std::filesystem::path& base, const std::string& format);
/// Reads a .csv or .json report.
EvalReport read_report(const std::filesystem::path& path);

bool operator==(const BinStat& a, const BinStat& b);
bool operator==(const Stratum& a, const Stratum& b);
bool operator==(const EvalReport& a, const EvalReport& b);

}  // namespace agb::eval
