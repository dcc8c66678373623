#pragma once

// File ingestion, strict JSON run configuration, and the command
// implementations behind the CLI (simulate / fit / depmap / bench-accept /
// transform / oracle). All numeric CSV output uses 17 significant digits.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "spext/dependence.hpp"
#include "spext/infer.hpp"
#include "spext/oracle.hpp"
#include "spext/simulate.hpp"

namespace spext {

using nlohmann::json;

inline constexpr const char* kToolVersion = "spext 0.1.0";

// Configuration / parse problems exit with code 2, numerical failures with 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s, int line, int col) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("non-numeric value '" + s + "' at line " + std::to_string(line) +
                      ", column " + std::to_string(col));
  }
  if (pos != s.size())
    throw ConfigError("non-numeric value '" + s + "' at line " + std::to_string(line) +
                      ", column " + std::to_string(col));
  return v;
}

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

template <typename T>
T optional_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

}  // namespace detail

// Generic CSV table: header row, first column a replicate/site label.
struct CsvTable {
  std::vector<std::string> headers;  // excluding the label column
  std::vector<std::string> labels;
  Mat values;  // NaN for empty cells
};

inline CsvTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  auto header = detail::split_csv_line(line);
  if (header.size() < 2) throw ConfigError(path + ": header needs at least two columns");
  CsvTable out;
  out.headers.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ConfigError(path + ": line " + std::to_string(lineno) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()));
    out.labels.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c)
      row.push_back(cells[c].empty() ? std::nan("")
                                     : detail::parse_number(cells[c], lineno, static_cast<int>(c + 1)));
    rows.push_back(std::move(row));
  }
  out.values = Mat(rows.size(), out.headers.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < out.headers.size(); ++j) out.values(i, j) = rows[i][j];
  return out;
}

// Sites CSV with header site_id,x,y; row order defines matrix indexing.
inline SiteSet load_sites(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  auto header = detail::split_csv_line(line);
  if (header.size() != 3 || header[0] != "site_id" || header[1] != "x" || header[2] != "y")
    throw ConfigError(path + ": header must be site_id,x,y");
  std::vector<std::string> ids;
  std::vector<std::array<double, 2>> coords;
  std::vector<int> lines;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != 3)
      throw ConfigError(path + ": line " + std::to_string(lineno) + " needs 3 cells");
    double x = detail::parse_number(cells[1], lineno, 2);
    double y = detail::parse_number(cells[2], lineno, 3);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] == cells[0])
        throw ConfigError(path + ": duplicate site id '" + cells[0] + "' at lines " +
                          std::to_string(lines[k]) + " and " + std::to_string(lineno));
      if (std::hypot(coords[k][0] - x, coords[k][1] - y) < 1e-12)
        throw ConfigError(path + ": duplicate coordinates at lines " +
                          std::to_string(lines[k]) + " and " + std::to_string(lineno));
    }
    ids.push_back(cells[0]);
    coords.push_back({x, y});
    lines.push_back(lineno);
  }
  if (ids.empty()) throw ConfigError(path + ": empty site set");
  Mat c(ids.size(), 2);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    c(i, 0) = coords[i][0];
    c(i, 1) = coords[i][1];
  }
  return SiteSet(c, ids);
}

// Observations CSV: first column replicate id, remaining columns realigned to
// the site order by header name. Empty cells are missing.
inline ObservationSet load_observations(const std::string& path, const SiteSet& sites) {
  auto table = load_table(path);
  const int d = sites.dim();
  std::vector<int> col_of(d, -1);
  std::vector<std::string> unmatched;
  for (std::size_t c = 0; c < table.headers.size(); ++c) {
    bool found = false;
    for (int j = 0; j < d; ++j)
      if (sites.ids[j] == table.headers[c]) {
        col_of[j] = static_cast<int>(c);
        found = true;
        break;
      }
    if (!found) unmatched.push_back(table.headers[c]);
  }
  for (int j = 0; j < d; ++j)
    if (col_of[j] < 0) unmatched.push_back(sites.ids[j] + " (missing column)");
  if (!unmatched.empty()) {
    std::string msg = path + ": unmatched columns/sites:";
    for (const auto& s : unmatched) msg += " " + s;
    throw ConfigError(msg);
  }
  ObservationSet out;
  out.values = Mat(table.values.rows(), d);
  for (int j = 0; j < d; ++j) out.values.col(j) = table.values.col(col_of[j]);
  out.margins = Margins::Raw;
  return out;
}

inline void write_table_csv(const std::string& path, const std::string& label_header,
                            const std::vector<std::string>& headers,
                            const std::vector<std::string>& labels, const Mat& values) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << label_header;
  for (const auto& h : headers) out << ',' << h;
  out << '\n';
  for (int i = 0; i < values.rows(); ++i) {
    out << labels[i];
    for (int j = 0; j < values.cols(); ++j) {
      out << ',';
      if (!std::isnan(values(i, j))) out << detail::fmt17(values(i, j));
    }
    out << '\n';
  }
}

inline json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

inline void write_json(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << doc.dump(2) << '\n';
}

// ---- config block parsers ----

inline VariogramSpec parse_variogram(const json& blk) {
  detail::check_keys(blk, {"lambda", "smooth", "rotation", "stretch"}, "variogram");
  try {
    return VariogramSpec(detail::require<double>(blk, "lambda", "variogram"),
                         detail::require<double>(blk, "smooth", "variogram"),
                         detail::optional_or<double>(blk, "rotation", 0.0, "variogram"),
                         detail::optional_or<double>(blk, "stretch", 1.0, "variogram"));
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("variogram: ") + e.what());
  }
}

inline RiskSpec parse_risk(const json& blk) {
  detail::check_keys(blk, {"kind", "p", "weights"}, "risk");
  auto kind = detail::require<std::string>(blk, "kind", "risk");
  try {
    if (kind == "l1") return RiskSpec::l1();
    if (kind == "linf") return RiskSpec::linf();
    if (kind == "lp") return RiskSpec::lp(detail::require<double>(blk, "p", "risk"));
    if (kind == "linear") {
      auto w = detail::require<std::vector<double>>(blk, "weights", "risk");
      Vec wv(w.size());
      for (std::size_t i = 0; i < w.size(); ++i) wv[i] = w[i];
      return RiskSpec::linear(wv);
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("risk: ") + e.what());
  }
  throw ConfigError("risk: unknown kind '" + kind + "'");
}

inline SkewFieldSpec parse_skew(const json& blk, int d) {
  detail::check_keys(blk, {"centers", "b", "sigma_b", "background"}, "skew");
  auto centers = detail::require<std::vector<std::vector<double>>>(blk, "centers", "skew");
  Mat c(centers.size(), 2);
  for (std::size_t j = 0; j < centers.size(); ++j) {
    if (centers[j].size() != 2) throw ConfigError("skew: each centre needs 2 coordinates");
    c(j, 0) = centers[j][0];
    c(j, 1) = centers[j][1];
  }
  auto b = detail::require<std::vector<double>>(blk, "b", "skew");
  Vec bv(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) bv[j] = b[j];
  Vec bg;
  if (blk.contains("background")) {
    auto g = detail::require<std::vector<double>>(blk, "background", "skew");
    if (static_cast<int>(g.size()) != d) throw ConfigError("skew: background length mismatch");
    bg = Vec(d);
    for (int j = 0; j < d; ++j) bg[j] = g[j];
  }
  try {
    return SkewFieldSpec(c, bv, detail::require<double>(blk, "sigma_b", "skew"), bg);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("skew: ") + e.what());
  }
}

using ModelVariant = std::variant<BrModel, SbrModel, TetModel>;

inline ModelVariant parse_model(const json& blk, const SiteSet& sites) {
  detail::check_keys(blk, {"family", "variogram", "skew", "nu"}, "model");
  auto family = detail::require<std::string>(blk, "family", "model");
  if (!blk.contains("variogram")) throw ConfigError("model: missing key 'variogram'");
  auto vario = parse_variogram(blk.at("variogram"));
  if (family == "br") return BrModel(build_br_cov(sites, vario));
  if (family == "sbr") {
    if (!blk.contains("skew")) throw ConfigError("model: sbr requires a skew block");
    auto skew = parse_skew(blk.at("skew"), sites.dim());
    return SbrModel::from_eta(build_br_cov(sites, vario), eta_from_kernels(sites, skew));
  }
  if (family == "tet")
    return TetModel(build_tet_corr(sites, vario), detail::require<double>(blk, "nu", "model"));
  throw ConfigError("model: unknown family '" + family + "'");
}

namespace detail {

inline json base_manifest(const std::string& command, const json& cfg) {
  json m;
  m["command"] = command;
  m["config"] = cfg;
  m["tool_version"] = kToolVersion;
  return m;
}

inline std::vector<std::string> replicate_labels(int n) {
  std::vector<std::string> v(n);
  for (int i = 0; i < n; ++i) v[i] = std::to_string(i + 1);
  return v;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace detail

// ---- commands; each writes its outputs under out_dir ----

inline void cmd_simulate(const json& cfg, const std::string& out_dir) {
  detail::check_keys(cfg, {"sites", "model", "n", "seed", "mode", "risk", "m"}, "simulate");
  auto sites = load_sites(detail::require<std::string>(cfg, "sites", "simulate"));
  if (!cfg.contains("model")) throw ConfigError("simulate: missing key 'model'");
  auto model = parse_model(cfg.at("model"), sites);
  int n = detail::require<int>(cfg, "n", "simulate");
  if (n <= 0) throw ConfigError("simulate: n must be positive");
  auto seed = detail::require<std::uint64_t>(cfg, "seed", "simulate");
  auto mode = detail::optional_or<std::string>(cfg, "mode", "maxstable", "simulate");
  detail::Timer timer;
  SimBatch batch = std::visit(
      [&](const auto& m) {
        if (mode == "maxstable") return sample_maxstable(m, n, seed);
        if (mode == "rpareto-l1") return sample_rpareto_l1(m, n, seed);
        if (!cfg.contains("risk")) throw ConfigError("simulate: mode '" + mode + "' needs a risk block");
        auto risk = parse_risk(cfg.at("risk"));
        if (mode == "rpareto-convex") return sample_rpareto_convex(m, risk, n, seed);
        if (mode == "rpareto-dombry") {
          double big_m = detail::optional_or<double>(cfg, "m", risk.dombry_m(m.dim()), "simulate");
          return sample_rpareto_dombry_baseline(m, risk, big_m, n, seed);
        }
        throw ConfigError("simulate: unknown mode '" + mode + "'");
      },
      model);
  write_table_csv(out_dir + "/samples.csv", "replicate", sites.ids,
                  detail::replicate_labels(n), batch.samples);
  auto manifest = detail::base_manifest("simulate", cfg);
  manifest["seed"] = seed;
  manifest["model"] = batch.model;
  manifest["n"] = n;
  if (!batch.risk.empty()) {
    manifest["risk"] = batch.risk;
    manifest["proposals_used"] = batch.proposals_used;
    manifest["acceptance_rate"] = static_cast<double>(n) / batch.proposals_used;
  }
  manifest["wall_seconds"] = timer.seconds();
  write_json(out_dir + "/manifest.json", manifest);
}

inline void cmd_fit(const json& cfg, const std::string& out_dir) {
  detail::check_keys(cfg,
                     {"sites", "data", "margins", "family", "risk", "threshold", "skew",
                      "nu", "anisotropy", "start", "optimizer", "jackknife", "seed"},
                     "fit");
  auto sites = load_sites(detail::require<std::string>(cfg, "sites", "fit"));
  auto obs = load_observations(detail::require<std::string>(cfg, "data", "fit"), sites);
  auto margins = detail::require<std::string>(cfg, "margins", "fit");
  if (margins == "pareto")
    obs.margins = Margins::Pareto;
  else if (margins == "frechet")
    obs.margins = Margins::Frechet;
  else
    throw ConfigError("fit: margins must be 'pareto' or 'frechet'");

  FitConfig fc;
  auto family = detail::require<std::string>(cfg, "family", "fit");
  if (family == "br")
    fc.family = ModelFamily::Br;
  else if (family == "sbr")
    fc.family = ModelFamily::Sbr;
  else if (family == "tet")
    fc.family = ModelFamily::Tet;
  else
    throw ConfigError("fit: unknown family '" + family + "'");
  if (cfg.contains("risk")) fc.risk = parse_risk(cfg.at("risk"));
  if (cfg.contains("threshold")) {
    const auto& th = cfg.at("threshold");
    detail::check_keys(th, {"quantile", "u"}, "threshold");
    fc.threshold = detail::optional_or<double>(th, "u", 0.0, "threshold");
    fc.quantile = detail::optional_or<double>(th, "quantile", 0.95, "threshold");
  }
  if (fc.family == ModelFamily::Sbr) {
    if (!cfg.contains("skew")) throw ConfigError("fit: sbr requires a skew block");
    const auto& sk = cfg.at("skew");
    detail::check_keys(sk, {"centers", "sigma_b"}, "skew");
    auto centers = detail::require<std::vector<std::vector<double>>>(sk, "centers", "skew");
    fc.centers = Mat(centers.size(), 2);
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (centers[j].size() != 2) throw ConfigError("skew: each centre needs 2 coordinates");
      fc.centers(j, 0) = centers[j][0];
      fc.centers(j, 1) = centers[j][1];
    }
    fc.sigma_b = detail::require<double>(sk, "sigma_b", "skew");
  }
  if (cfg.contains("nu")) {
    const auto& nu = cfg.at("nu");
    detail::check_keys(nu, {"fixed", "start"}, "nu");
    if (nu.contains("fixed")) {
      fc.fit_nu = false;
      fc.nu0 = detail::require<double>(nu, "fixed", "nu");
    } else {
      fc.fit_nu = true;
      fc.nu0 = detail::optional_or<double>(nu, "start", 2.0, "nu");
    }
  }
  fc.fit_anisotropy = detail::optional_or<bool>(cfg, "anisotropy", false, "fit");
  if (cfg.contains("start")) {
    const auto& st = cfg.at("start");
    detail::check_keys(st, {"lambda", "smooth"}, "start");
    fc.lambda0 = detail::optional_or<double>(st, "lambda", 0.0, "start");
    fc.smooth0 = detail::optional_or<double>(st, "smooth", 1.0, "start");
  }
  if (cfg.contains("optimizer")) {
    const auto& op = cfg.at("optimizer");
    detail::check_keys(op, {"max_iter", "ftol", "step"}, "optimizer");
    fc.nm.max_iter = detail::optional_or<int>(op, "max_iter", fc.nm.max_iter, "optimizer");
    fc.nm.ftol = detail::optional_or<double>(op, "ftol", fc.nm.ftol, "optimizer");
    fc.nm.step = detail::optional_or<double>(op, "step", fc.nm.step, "optimizer");
  }
  fc.jackknife = detail::optional_or<bool>(cfg, "jackknife", false, "fit");
  auto seed = detail::optional_or<std::uint64_t>(cfg, "seed", 0, "fit");

  try {
    auto res = fit(fc, sites, obs, seed);
    json doc = detail::base_manifest("fit", cfg);
    doc["family"] = res.family;
    json est = json::object(), se = json::object();
    for (std::size_t i = 0; i < res.names.size(); ++i) {
      est[res.names[i]] = res.estimates[i];
      if (res.se.size() > 0) se[res.names[i]] = res.se[i];
    }
    doc["estimates"] = est;
    if (res.se.size() > 0) {
      doc["standard_errors"] = se;
      doc["jackknife"] = {{"scheme", "delete-one-exceedance"},
                          {"failures", res.jackknife_failures}};
    }
    doc["loglik"] = res.loglik;
    doc["aic"] = res.aic;
    doc["n_parameters"] = res.names.size();
    doc["n_exceedances"] = res.n_a;
    doc["threshold"] = res.threshold;
    doc["seed"] = res.seed;
    doc["converged"] = res.converged;
    doc["missing_rows_marginalized"] = true;
    doc["wall_seconds"] = res.wall_seconds;
    write_json(out_dir + "/fit.json", doc);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("fit: ") + e.what());
  }
}

inline void cmd_depmap(const json& cfg, const std::string& out_dir) {
  detail::check_keys(cfg, {"sites", "model", "data", "mode", "u", "references"}, "depmap");
  auto sites = load_sites(detail::require<std::string>(cfg, "sites", "depmap"));
  auto refs = detail::require<std::vector<std::string>>(cfg, "references", "depmap");
  if (refs.empty()) throw ConfigError("depmap: at least one reference site required");
  std::optional<ModelVariant> model;
  if (cfg.contains("model")) model = parse_model(cfg.at("model"), sites);
  std::optional<Mat> data;
  Theta2Mode mode = Theta2Mode::MaximaMadogram;
  double u = 1.0;
  if (cfg.contains("data")) {
    data = load_observations(detail::require<std::string>(cfg, "data", "depmap"), sites).values;
    auto ms = detail::optional_or<std::string>(cfg, "mode", "madogram", "depmap");
    if (ms == "exceedance")
      mode = Theta2Mode::ExceedanceRatio;
    else if (ms != "madogram")
      throw ConfigError("depmap: unknown mode '" + ms + "'");
    u = detail::optional_or<double>(cfg, "u", 1.0, "depmap");
  }
  if (!model && !data) throw ConfigError("depmap: needs a model block or a data file");

  auto write_map = [&](const DepMap& map, const std::string& ref_id) {
    Mat table(sites.dim(), 3);
    table.col(0) = sites.coords.col(0);
    table.col(1) = sites.coords.col(1);
    table.col(2) = map.theta2;
    write_table_csv(out_dir + "/depmap_" + ref_id + "_" + map.source + ".csv", "site_id",
                    {"site_x", "site_y", "theta2"}, sites.ids, table);
  };
  for (const auto& ref_id : refs) {
    int ref = -1;
    for (int j = 0; j < sites.dim(); ++j)
      if (sites.ids[j] == ref_id) ref = j;
    if (ref < 0) throw ConfigError("depmap: unknown reference site id '" + ref_id + "'");
    if (model)
      write_map(std::visit([&](const auto& m) { return depmap(m, ref); }, *model), ref_id);
    if (data) write_map(depmap(*data, ref, mode, u), ref_id);
  }
  auto manifest = detail::base_manifest("depmap", cfg);
  manifest["references"] = refs;
  write_json(out_dir + "/manifest.json", manifest);
}

inline void cmd_bench_accept(const json& cfg, const std::string& out_dir) {
  detail::check_keys(cfg, {"d", "p", "reps", "seed", "lambda", "smooth"}, "bench-accept");
  auto dims = detail::require<std::vector<int>>(cfg, "d", "bench-accept");
  auto ps = detail::require<std::vector<double>>(cfg, "p", "bench-accept");
  int reps = detail::require<int>(cfg, "reps", "bench-accept");
  if (reps < 10000) throw ConfigError("bench-accept: reps must be at least 10000");
  auto seed = detail::require<std::uint64_t>(cfg, "seed", "bench-accept");
  VariogramSpec vario(detail::optional_or<double>(cfg, "lambda", 2.0, "bench-accept"),
                      detail::optional_or<double>(cfg, "smooth", 1.0, "bench-accept"));
  detail::Timer timer;
  std::ofstream out(out_dir + "/bench.csv");
  if (!out) throw ConfigError("cannot write file: " + out_dir + "/bench.csv");
  out << "d,p,accept_dombry_pct,accept_thm4_pct,reps,seed\n";
  for (int d : dims) {
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
    if (side * side != d) throw ConfigError("bench-accept: d must be a square number");
    BrModel m(build_br_cov(grid_sites(side, 1.0, static_cast<double>(side)), vario));
    detail::BrTilted tilted(m);
    for (double p : ps) {
      RiskSpec risk = RiskSpec::lp(p);
      double big_m = risk.dombry_m(d);
      long long acc_d = 0, acc_t = 0;
      for (int k = 0; k < reps; ++k) {
        auto rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
        Vec z = detail::rpareto_l1_one(tilted, rng);
        double r = risk(z);
        if (r >= big_m) ++acc_d;
        if (r > 1.0) ++acc_t;
      }
      out << d << ',' << detail::fmt17(p) << ',' << detail::fmt17(100.0 * acc_d / reps) << ','
          << detail::fmt17(100.0 * acc_t / reps) << ',' << reps << ',' << seed << '\n';
    }
  }
  out.close();
  auto manifest = detail::base_manifest("bench-accept", cfg);
  manifest["wall_seconds"] = timer.seconds();
  write_json(out_dir + "/manifest.json", manifest);
}

inline void cmd_transform(const json& cfg, const std::string& out_dir) {
  detail::check_keys(cfg, {"data", "target", "zeros"}, "transform");
  auto path = detail::require<std::string>(cfg, "data", "transform");
  {
    // Refuse to re-transform output that carries a margins sidecar.
    std::ifstream side(path + ".manifest.json");
    if (side) {
      json meta = json::parse(side, nullptr, false);
      if (!meta.is_discarded() && meta.contains("margins") && meta["margins"] != "raw")
        throw ConfigError("transform: input already on '" +
                          meta["margins"].get<std::string>() + "' margins");
    }
  }
  auto target_s = detail::require<std::string>(cfg, "target", "transform");
  Margins target;
  if (target_s == "pareto")
    target = Margins::Pareto;
  else if (target_s == "frechet")
    target = Margins::Frechet;
  else
    throw ConfigError("transform: target must be 'pareto' or 'frechet'");
  auto zeros_s = detail::optional_or<std::string>(cfg, "zeros", "missing", "transform");
  ZeroPolicy zeros;
  if (zeros_s == "missing")
    zeros = ZeroPolicy::Missing;
  else if (zeros_s == "keep")
    zeros = ZeroPolicy::Keep;
  else
    throw ConfigError("transform: zeros must be 'missing' or 'keep'");

  auto table = load_table(path);
  ObservationSet raw;
  raw.values = table.values;
  auto out = marginal_transform(raw, target, zeros);
  std::string out_path = out_dir + "/transformed.csv";
  write_table_csv(out_path, "replicate", table.headers, table.labels, out.values);
  json sidecar = {{"margins", target_s}, {"zeros", zeros_s}, {"tool_version", kToolVersion}};
  write_json(out_path + ".manifest.json", sidecar);
  auto manifest = detail::base_manifest("transform", cfg);
  manifest["margins"] = target_s;
  manifest["zeros"] = zeros_s;
  write_json(out_dir + "/manifest.json", manifest);
}

// Hidden debugging entry point for the validation references.
inline void cmd_oracle(const json& cfg, const std::string& out_dir) {
  detail::check_keys(cfg, {"sites", "model", "op", "x", "n", "seed", "b", "rel_h"}, "oracle");
  auto sites = load_sites(detail::require<std::string>(cfg, "sites", "oracle"));
  if (!cfg.contains("model")) throw ConfigError("oracle: missing key 'model'");
  auto model = parse_model(cfg.at("model"), sites);
  auto op = detail::require<std::string>(cfg, "op", "oracle");
  auto xv = detail::require<std::vector<double>>(cfg, "x", "oracle");
  if (static_cast<int>(xv.size()) != sites.dim())
    throw ConfigError("oracle: x length must match the site count");
  Vec x(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) x[i] = xv[i];

  json doc = detail::base_manifest("oracle", cfg);
  doc["op"] = op;
  if (op == "kappa-quadrature") {
    if (sites.dim() > 4) throw ConfigError("oracle: kappa-quadrature limited to D <= 4");
    doc["value"] = std::visit([&](const auto& m) { return kappa_quadrature(m, x); }, model);
  } else if (op == "exponent-mc") {
    int n = detail::optional_or<int>(cfg, "n", 100000, "oracle");
    auto seed = detail::optional_or<std::uint64_t>(cfg, "seed", 0, "oracle");
    doc["value"] = std::visit([&](const auto& m) { return exponent_mc(m, x, n, seed); }, model);
    doc["n"] = n;
    doc["seed"] = seed;
  } else if (op == "fd-partial") {
    auto bs = detail::require<std::vector<int>>(cfg, "b", "oracle");
    if (bs.size() > 3) throw ConfigError("oracle: fd-partial limited to |B| <= 3");
    IndexSet b(bs.begin(), bs.end());
    double rel_h = detail::optional_or<double>(cfg, "rel_h", 1e-4, "oracle");
    doc["value"] = std::visit(
        [&](const auto& m) {
          return finite_diff_partial([&](const Vec& y) { return exponent_of(m, y); }, x, b,
                                     rel_h);
        },
        model);
  } else {
    throw ConfigError("oracle: unknown op '" + op + "'");
  }
  write_json(out_dir + "/oracle.json", doc);
}

}  // namespace spext
