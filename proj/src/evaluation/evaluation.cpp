// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

#include "agb/evaluation/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "agb/error.hpp"

namespace agb::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s, const std::string& what) {
  if (s == "inf") return kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw_data("E_PARSE", what + ": not a number: '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

// ---- bins ----------------------------------------------------------------------

BinSpec BinSpec::parse(const std::string& text) {
  BinSpec spec;
  spec.edges.clear();
  for (const auto& part : split(text, ',')) {
    if (part == "inf") break;
    try {
      std::size_t used = 0;
      spec.edges.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw_config("bins: cannot parse edge '" + part + "'");
    }
  }
  spec.validate();
  return spec;
}

void BinSpec::validate() const {
  if (edges.empty() || edges.front() != 0.0) throw_config("bins: edges must start at 0");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]) || !std::isfinite(edges[i]))
      throw_config("bins: edges must be finite and strictly increasing");
}

double BinSpec::hi(std::size_t bin) const { return bin + 1 < edges.size() ? edges.at(bin + 1) : kInf; }

std::string BinSpec::label(std::size_t bin) const {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  if (bin + 1 >= edges.size()) return fmt(lo(bin)) + "+";
  return fmt(lo(bin)) + "-" + fmt(hi(bin));
}

int BinSpec::find(double value) const {
  if (!(value >= edges.front())) return -1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), value);
  return static_cast<int>(it - edges.begin()) - 1;
}

// ---- accumulation ----------------------------------------------------------------

BinAccumulator::BinAccumulator(BinSpec bins) : bins_(std::move(bins)), sse_(bins_.size()), n_(bins_.size()) {
  bins_.validate();
}

void BinAccumulator::add(std::span<const float> pred, std::span<const float> label,
                         std::span<const std::uint8_t> valid) {
  if (pred.size() != label.size() || pred.size() != valid.size())
    throw_invalid("binwise_rmse: prediction, label and validity sizes differ");
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (!valid[i]) continue;
    const double l = label[i];
    const int b = bins_.find(l);
    if (b < 0) throw_invalid("binwise_rmse: label " + num(l) + " lies below the first bin edge");
    const double e = static_cast<double>(pred[i]) - l;
    sse_[static_cast<std::size_t>(b)] += e * e;
    ++n_[static_cast<std::size_t>(b)];
  }
}

void BinAccumulator::merge(const BinAccumulator& other) {
  if (other.bins_.edges != bins_.edges) throw_invalid("BinAccumulator: bin specs differ");
  for (std::size_t b = 0; b < sse_.size(); ++b) {
    sse_[b] += other.sse_[b];
    n_[b] += other.n_[b];
  }
}

std::int64_t BinAccumulator::count() const {
  std::int64_t n = 0;
  for (auto v : n_) n += v;
  return n;
}

Stratum BinAccumulator::finish(const std::string& name) const {
  Stratum s;
  s.name = name;
  double total = 0.0;
  for (std::size_t b = 0; b < sse_.size(); ++b) {
    BinStat st{bins_.lo(b), bins_.hi(b), n_[b], std::nullopt};
    if (n_[b] > 0) st.rmse = std::sqrt(sse_[b] / static_cast<double>(n_[b]));
    s.bins.push_back(st);
    s.n += n_[b];
    total += sse_[b];
  }
  if (s.n > 0) s.rmse = std::sqrt(total / static_cast<double>(s.n));
  return s;
}

Stratum binwise_rmse(std::span<const float> pred, std::span<const float> label, std::span<const std::uint8_t> valid,
                     const BinSpec& bins, const std::string& name) {
  BinAccumulator acc(bins);
  acc.add(pred, label, valid);
  if (acc.count() == 0) throw_data("E_EMPTY_LABELS", "binwise_rmse: no valid label pixels");
  return acc.finish(name);
}

const Stratum* EvalReport::stratum(const std::string& name) const {
  if (name == overall.name) return &overall;
  for (const auto& r : regions)
    if (r.name == name) return &r;
  return nullptr;
}

EvalReport stratified_report(const std::vector<TilePrediction>& predictions, const geo::Dataset& data,
                             const BinSpec& bins, const std::string& model_id, const std::string& dataset_id,
                             const ArtifactTags& tags) {
  bins.validate();
  std::map<std::string, const TilePrediction*> by_id;
  for (const auto& p : predictions) by_id[p.tile_id] = &p;

  // (tile id, tile index) for validation tiles, in id order.
  std::vector<std::pair<std::string, std::size_t>> order;
  for (std::size_t i = 0; i < data.tiles.size(); ++i)
    if (data.entry(i).split == geo::Split::validation) order.emplace_back(data.entry(i).tile_id, i);
  if (order.empty()) throw_data("E_EMPTY_SPLIT", "evaluate: the validation split is empty");
  std::sort(order.begin(), order.end());

  std::string missing;
  for (const auto& [id, i] : order)
    if (!by_id.count(id)) missing += (missing.empty() ? "" : ",") + id;
  if (!missing.empty()) throw_data("E_MISSING_PREDICTIONS", "evaluate: no prediction for tiles " + missing);

  BinAccumulator all(bins);
  std::map<geo::EcoRegion, BinAccumulator> per_region;
  for (const auto& [id, i] : order) {
    const auto& tile = data.tiles[i];
    const auto& pred = by_id[id]->pred;
    if (pred.size() != tile.label.size())
      throw_invalid("evaluate: prediction for " + id + " has " + std::to_string(pred.size()) + " pixels, expected " +
                    std::to_string(tile.label.size()));
    BinAccumulator acc(bins);
    acc.add(pred, tile.label, tile.valid);
    all.merge(acc);
    per_region.try_emplace(data.entry(i).ecoregion, bins).first->second.merge(acc);
  }
  if (all.count() == 0) throw_data("E_EMPTY_LABELS", "evaluate: validation tiles carry no valid labels");

  EvalReport report;
  report.model_id = model_id;
  report.dataset_id = dataset_id;
  report.tags = tags;
  report.bins = bins;
  report.overall = all.finish("all");
  for (auto region : geo::kEcoRegions) {
    auto it = per_region.find(region);
    if (it != per_region.end()) report.regions.push_back(it->second.finish(geo::to_string(region)));
  }
  return report;
}

// ---- comparison ---------------------------------------------------------------------

bool operator==(const BinStat& a, const BinStat& b) {
  return a.lo == b.lo && a.hi == b.hi && a.n == b.n && a.rmse == b.rmse;
}
bool operator==(const Stratum& a, const Stratum& b) {
  return a.name == b.name && a.n == b.n && a.rmse == b.rmse && a.bins == b.bins;
}
bool operator==(const EvalReport& a, const EvalReport& b) {
  return a.model_id == b.model_id && a.dataset_id == b.dataset_id && a.tags.config_hash == b.tags.config_hash &&
         a.tags.seed == b.tags.seed && a.bins.edges == b.bins.edges && a.overall == b.overall &&
         a.regions == b.regions;
}

// ---- CSV ---------------------------------------------------------------------------

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "# model_id=" << r.model_id << "\n";
  out << "# dataset_id=" << r.dataset_id << "\n";
  out << "# config_hash=" << r.tags.config_hash << "\n";
  out << "# seed=" << r.tags.seed << "\n";
  std::string edges;
  for (double e : r.bins.edges) edges += (edges.empty() ? "" : ",") + num(e);
  out << "# bins=" << edges << "\n";
  out << "stratum,bin_lo,bin_hi,n,rmse\n";
  auto emit = [&](const Stratum& s) {
    out << s.name << ",,," << s.n << "," << (s.rmse ? num(*s.rmse) : "") << "\n";
    for (const auto& b : s.bins)
      out << s.name << "," << num(b.lo) << "," << num(b.hi) << "," << b.n << "," << (b.rmse ? num(*b.rmse) : "")
          << "\n";
  };
  emit(r.overall);
  for (const auto& s : r.regions) emit(s);
  return out.str();
}

EvalReport report_from_csv(const std::string& text) {
  EvalReport r;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::vector<Stratum> strata;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2), value = line.substr(eq + 1);
      if (key == "model_id") r.model_id = value;
      else if (key == "dataset_id") r.dataset_id = value;
      else if (key == "config_hash") r.tags.config_hash = value;
      else if (key == "seed") r.tags.seed = std::stoull(value);
      else if (key == "bins") r.bins = BinSpec::parse(value);
      continue;
    }
    if (!header) {
      if (line != "stratum,bin_lo,bin_hi,n,rmse") throw_data("E_PARSE", "report csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    const std::string where = "report csv line " + std::to_string(line_no);
    if (f.size() != 5) throw_data("E_PARSE", where + ": expected 5 fields");
    std::optional<double> rmse;
    if (!f[4].empty()) rmse = parse_num(f[4], where);
    const auto n = static_cast<std::int64_t>(parse_num(f[3], where));
    if (f[1].empty()) {
      strata.push_back(Stratum{f[0], n, rmse, {}});
    } else {
      if (strata.empty() || strata.back().name != f[0]) throw_data("E_PARSE", where + ": bin row before its stratum");
      strata.back().bins.push_back(BinStat{parse_num(f[1], where), parse_num(f[2], where), n, rmse});
    }
  }
  if (!header || strata.empty()) throw_data("E_PARSE", "report csv: no rows");
  r.overall = strata.front();
  r.regions.assign(strata.begin() + 1, strata.end());
  return r;
}

// ---- JSON ---------------------------------------------------------------------------

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json stratum_json(const Stratum& s, const BinSpec& spec) {
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t b = 0; b < s.bins.size(); ++b) {
    const auto& st = s.bins[b];
    bins.push_back({{"label", spec.label(b)},
                    {"lo", st.lo},
                    {"hi", std::isinf(st.hi) ? nlohmann::json(nullptr) : nlohmann::json(st.hi)},
                    {"n", st.n},
                    {"rmse", opt(st.rmse)}});
  }
  return {{"name", s.name}, {"n", s.n}, {"rmse", opt(s.rmse)}, {"bins", bins}};
}

Stratum stratum_from(const nlohmann::json& j) {
  Stratum s;
  s.name = j.at("name").get<std::string>();
  s.n = j.at("n").get<std::int64_t>();
  if (!j.at("rmse").is_null()) s.rmse = j.at("rmse").get<double>();
  for (const auto& b : j.at("bins")) {
    BinStat st;
    st.lo = b.at("lo").get<double>();
    st.hi = b.at("hi").is_null() ? kInf : b.at("hi").get<double>();
    st.n = b.at("n").get<std::int64_t>();
    if (!b.at("rmse").is_null()) st.rmse = b.at("rmse").get<double>();
    s.bins.push_back(st);
  }
  return s;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& s : r.regions) regions.push_back(stratum_json(s, r.bins));
  return {{"model_id", r.model_id},  {"dataset_id", r.dataset_id}, {"config_hash", r.tags.config_hash},
          {"seed", r.tags.seed},     {"bins", r.bins.edges},       {"overall", stratum_json(r.overall, r.bins)},
          {"regions", regions}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.model_id = j.at("model_id").get<std::string>();
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.tags.config_hash = j.at("config_hash").get<std::string>();
    r.tags.seed = j.at("seed").get<std::uint64_t>();
    r.bins.edges = j.at("bins").get<std::vector<double>>();
    r.overall = stratum_from(j.at("overall"));
    for (const auto& s : j.at("regions")) r.regions.push_back(stratum_from(s));
  } catch (const nlohmann::json::exception& e) {
    throw_data("E_PARSE", std::string("report json: ") + e.what());
  }
  r.bins.validate();
  return r;
}

// ---- SVG -----------------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, const char* f = "%.1f") {
  char buf[40];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

}  // namespace

std::string render_svg(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw_invalid("render_svg: no reports");
  const BinSpec& spec = reports.front().bins;
  for (const auto& r : reports)
    if (r.bins.edges != spec.edges) throw_invalid("render_svg: reports use different bins");

  std::vector<std::string> panels{"all"};
  for (auto region : geo::kEcoRegions) {
    const std::string name = geo::to_string(region);
    for (const auto& r : reports)
      if (r.stratum(name)) {
        panels.push_back(name);
        break;
      }
  }
  double ymax = 1.0;
  for (const auto& r : reports)
    for (const auto& p : panels)
      if (const Stratum* s = r.stratum(p))
        for (const auto& b : s->bins)
          if (b.rmse) ymax = std::max(ymax, *b.rmse);
  ymax *= 1.1;

  const double pw = 420, ph = 260, margin = 50, plot_h = ph - 2 * margin;
  const int cols = 2;
  const int rows = static_cast<int>((panels.size() + 1) / 2);
  const double width = cols * pw, height = rows * ph + 40;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t m = 0; m < reports.size(); ++m) {
    const double lx = 10 + 160 * static_cast<double>(m);
    o << "<g class=\"legend\"><rect x=\"" << lx << "\" y=\"10\" width=\"12\" height=\"12\" fill=\""
      << kPalette[m % 6] << "\"/><text x=\"" << lx + 16 << "\" y=\"21\">" << xml_escape(reports[m].model_id)
      << "</text></g>\n";
  }
  const double nb = static_cast<double>(spec.size());
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double ox = static_cast<double>(p % cols) * pw, oy = 40 + static_cast<double>(p / cols) * ph;
    const double x0 = ox + margin, y0 = oy + ph - margin, plot_w = pw - 1.5 * margin;
    const double group_w = plot_w / nb;
    const double bar_w = group_w * 0.8 / static_cast<double>(reports.size());
    o << "<g class=\"panel\" data-stratum=\"" << panels[p] << "\">\n";
    o << "<text x=\"" << ox + pw / 2 << "\" y=\"" << oy + 20 << "\" text-anchor=\"middle\" font-weight=\"bold\">"
      << (panels[p] == "all" ? "All regions" : panels[p]) << "</text>\n";
    o << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 + plot_w << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y0 - plot_h
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << ox + 12 << "\" y=\"" << y0 - plot_h / 2 << "\" transform=\"rotate(-90 " << ox + 12 << " "
      << y0 - plot_h / 2 << ")\" text-anchor=\"middle\">RMSE (Mg/ha)</text>\n";
    for (int t = 0; t <= 4; ++t) {
      const double v = ymax * t / 4.0, y = y0 - plot_h * t / 4.0;
      o << "<text x=\"" << x0 - 4 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(v, "%.0f")
        << "</text>\n";
    }
    for (std::size_t b = 0; b < spec.size(); ++b) {
      const double gx = x0 + group_w * static_cast<double>(b) + group_w * 0.1;
      o << "<g class=\"bin-group\" data-bin=\"" << spec.label(b) << "\">\n";
      for (std::size_t m = 0; m < reports.size(); ++m) {
        const Stratum* s = reports[m].stratum(panels[p]);
        const double bx = gx + bar_w * static_cast<double>(m);
        if (s && b < s->bins.size() && s->bins[b].rmse) {
          const double h = plot_h * *s->bins[b].rmse / ymax;
          o << "<rect class=\"bar\" data-model=\"" << xml_escape(reports[m].model_id) << "\" data-n=\""
            << s->bins[b].n << "\" x=\"" << fmt(bx, "%.2f") << "\" y=\"" << fmt(y0 - h, "%.2f") << "\" width=\""
            << fmt(bar_w, "%.2f") << "\" height=\"" << fmt(h, "%.2f") << "\" fill=\"" << kPalette[m % 6]
            << "\"><title>" << xml_escape(reports[m].model_id) << " " << spec.label(b) << ": "
            << fmt(*s->bins[b].rmse, "%.2f") << " (n=" << s->bins[b].n << ")</title></rect>\n";
        } else {
          o << "<text class=\"empty\" data-model=\"" << xml_escape(reports[m].model_id) << "\" x=\""
            << fmt(bx + bar_w / 2, "%.2f") << "\" y=\"" << y0 - 4
            << "\" text-anchor=\"middle\" font-size=\"8\">n=0</text>\n";
        }
      }
      o << "<text x=\"" << fmt(gx + group_w * 0.4, "%.2f") << "\" y=\"" << y0 + 14 << "\" text-anchor=\"middle\">"
        << spec.label(b) << "</text>\n";
      o << "</g>\n";
    }
    o << "<text x=\"" << x0 + plot_w / 2 << "\" y=\"" << y0 + 32 << "\" text-anchor=\"middle\">AGB bin (Mg/ha)</text>\n";
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---- files ---------------------------------------------------------------------------

void write_report(const EvalReport& report, const std::filesystem::path& base, const std::string& format) {
  std::string text;
  if (format == "csv") text = report_to_csv(report);
  else if (format == "json") text = report_to_json(report).dump(2) + "\n";
  else if (format == "svg") text = render_svg({report});
  else throw_invalid("unknown report format '" + format + "' (expected csv, json or svg)");
  const auto path = base.string() + "." + format;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_data("E_IO", "cannot write " + path);
  f << text;
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_data("E_IO", "cannot read report " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  if (path.extension() == ".json") {
    try {
      return report_from_json(nlohmann::json::parse(ss.str()));
    } catch (const nlohmann::json::parse_error& e) {
      throw_data("E_PARSE", path.string() + ": " + e.what());
    }
  }
  return report_from_csv(ss.str());
}

}  // namespace agb::eval
