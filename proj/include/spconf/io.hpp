#ifndef SPCONF_IO_HPP
#define SPCONF_IO_HPP

// CSV and JSON forms of fields, datasets, estimates and Monte Carlo output.
// Numbers are written in shortest round-trip form so files are reproducible
// byte for byte.

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "config_json.hpp"
#include "estimators.hpp"
#include "mc.hpp"

namespace spconf {

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline ScenarioConfig load_config(const std::string& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// fields and datasets

inline void write_field_csv(std::ostream& os, const LocationGrid& grid, const VectorXd& values) {
  if (values.size() != static_cast<Eigen::Index>(grid.size()))
    throw InvalidArgument("field length does not match grid");
  os << "x,y,value\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    os << format_double(grid[i].x) << ',' << format_double(grid[i].y) << ','
       << format_double(values[static_cast<Eigen::Index>(i)]) << '\n';
}

inline void write_dataset_csv(std::ostream& os, const Dataset& ds, bool latent) {
  os << "x,y,Z,C,Y";
  if (latent) os << ",S1,S2,E,U,nu,eps";
  os << '\n';
  for (std::size_t i = 0; i < ds.grid.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    os << format_double(ds.grid[i].x) << ',' << format_double(ds.grid[i].y) << ',' << format_double(ds.Z[k]) << ','
       << format_double(ds.C[k]) << ',' << format_double(ds.Y[k]);
    if (latent)
      for (const VectorXd* v : {&ds.S1, &ds.S2, &ds.E, &ds.U, &ds.nu, &ds.eps}) os << ',' << format_double((*v)[k]);
    os << '\n';
  }
}

/// Parsed CSV: header names and numeric columns.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>* find(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return &columns[j];
    return nullptr;
  }
};

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_number(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidArgument("line " + std::to_string(line) + ": '" + std::string(s) + "' is not a number");
  return v;
}

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (t.header.empty()) {
      for (auto f : fields) t.header.emplace_back(f);
      t.columns.resize(t.header.size());
      continue;
    }
    if (fields.size() != t.header.size())
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                            " fields, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) t.columns[j].push_back(parse_number(fields[j], lineno));
  }
  if (t.header.empty()) throw InvalidArgument("CSV has no header");
  return t;
}

/// Observations from a dataset CSV (columns x, y, Z, C, Y; extra columns are
/// ignored). The row count must be a perfect square.
inline Observations observations_from_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  for (const char* col : {"x", "y", "Z", "C", "Y"})
    if (!t.find(col)) throw InvalidArgument(std::string("missing column '") + col + "'");
  const auto& xs = *t.find("x");
  const std::size_t n = xs.size();
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (static_cast<std::size_t>(m) * static_cast<std::size_t>(m) != n)
    throw InvalidArgument("row count " + std::to_string(n) + " is not a perfect square");
  std::vector<Point> pts(n);
  const auto& ys = *t.find("y");
  for (std::size_t i = 0; i < n; ++i) pts[i] = {xs[i], ys[i]};
  Observations obs;
  obs.grid = LocationGrid::from_points(m, std::move(pts));
  auto vec = [&](const char* name) {
    const auto& c = *t.find(name);
    return VectorXd(Eigen::Map<const VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
  };
  obs.Z = vec("Z");
  obs.C = vec("C");
  obs.Y = vec("Y");
  return obs;
}

// ---------------------------------------------------------------------------
// JSON forms

inline Json to_json(const EstimandSet& e) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"beta_structural", e.beta_structural},
              {"beta_uncond", opt(e.beta_uncond)},
              {"beta_cond_achieved", opt(e.beta_cond_achieved)},
              {"beta_cond_S1", opt(e.beta_cond_S1)}};
}

inline Json to_json(const EstimateRecord& r) {
  return Json{{"estimator", std::string(to_string(r.kind))},
              {"beta1_hat", r.beta1_hat},
              {"se", r.se},
              {"ci95", {r.ci95.first, r.ci95.second}},
              {"lambdas", r.lambdas},
              {"edf", r.edf},
              {"aic", r.aic},
              {"diagnostics", r.diagnostics}};
}

inline Json to_json(const EstimatorSpec& s) {
  return Json{{"estimator", s.label()},     {"max_freq", s.max_freq}, {"penalty_order", s.penalty_order},
              {"lambdas", s.smoothing.lambdas}, {"cutoff", s.cutoff},  {"stage1_include_C", s.stage1_include_C}};
}

inline Json to_json(const MCCell& c) {
  return Json{{"estimator", c.estimator},   {"target", c.target},
              {"target_value", c.target_value}, {"mean_estimate", c.mean_estimate},
              {"mean_bias", c.mean_bias},   {"mc_se_of_bias", c.mc_se_of_bias},
              {"sd", c.sd},                 {"sd_defined", c.sd_defined},
              {"rmse", c.rmse},             {"coverage95", c.coverage95},
              {"mean_aic", c.mean_aic},     {"n_success", c.n_success},
              {"n_failed", c.n_failed}};
}

inline Json to_json(const MCSummary& s, const MCPlan& plan) {
  Json cells = Json::array();
  for (const auto& c : s.cells) cells.push_back(to_json(c));
  Json ests = Json::array();
  for (const auto& e : plan.estimators) ests.push_back(to_json(e));
  Json fails = Json::object();
  for (std::size_t e = 0; e < s.failures.size(); ++e) fails[s.estimator_labels[e]] = s.failures[e];
  return Json{{"provenance",
               {{"config_hash", s.config_hash}, {"master_seed", s.master_seed}, {"R", s.R}, {"config", to_json(plan.config)}}},
              {"estimators", ests},
              {"targets", to_json(s.targets)},
              {"cells", cells},
              {"failures", fails}};
}

inline constexpr const char* kSummaryCsvHeader =
    "estimator,target,target_value,mean_estimate,mean_bias,mc_se_of_bias,sd,rmse,coverage95,mean_aic,n_success,"
    "n_failed";

/// Summary rows without a header; `lead`, when given, becomes an extra first column.
inline void write_summary_rows(std::ostream& os, const MCSummary& s, const std::string& lead = {}) {
  for (const auto& c : s.cells) {
    if (!lead.empty()) os << lead << ',';
    os << c.estimator << ',' << c.target << ',' << format_double(c.target_value) << ','
       << format_double(c.mean_estimate) << ',' << format_double(c.mean_bias) << ','
       << format_double(c.mc_se_of_bias) << ',' << format_double(c.sd) << ',' << format_double(c.rmse) << ','
       << format_double(c.coverage95) << ',' << format_double(c.mean_aic) << ',' << c.n_success << ','
       << c.n_failed << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const MCSummary& s) {
  os << kSummaryCsvHeader << '\n';
  write_summary_rows(os, s);
}

inline Json to_json(const ScenarioVerdict& v) {
  return Json{{"target", v.target},
              {"bias_spatial", v.bias_spatial},
              {"mc_se_spatial", v.se_spatial},
              {"bias_spatial_plus", v.bias_spatial_plus},
              {"mc_se_spatial_plus", v.se_spatial_plus},
              {"bias_gsem", v.bias_gsem},
              {"mc_se_gsem", v.se_gsem},
              {"prediction_holds", v.prediction_holds},
              {"separation_mc_se", v.separation},
              {"gsem_no_worse_than_max", v.gsem_no_worse_than_max}};
}

inline void write_aic_bias_csv(std::ostream& os, const AicBiasTable& t) {
  os << "lambda,mean_aic,mean_edf,mean_bias,abs_bias,mc_se,n_success\n";
  for (const auto& r : t.rows)
    os << format_double(r.lambda) << ',' << format_double(r.mean_aic) << ',' << format_double(r.mean_edf) << ','
       << format_double(r.mean_bias) << ',' << format_double(r.abs_bias) << ',' << format_double(r.mc_se) << ','
       << r.n_success << '\n';
}

inline Json to_json(const AicBiasTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"lambda", r.lambda},
                    {"mean_aic", r.mean_aic},
                    {"mean_edf", r.mean_edf},
                    {"mean_bias", r.mean_bias},
                    {"abs_bias", r.abs_bias},
                    {"mc_se", r.mc_se},
                    {"n_success", r.n_success}});
  return Json{{"target", t.target},       {"target_value", t.target_value},
              {"flag", t.flag},           {"best_separation_mc_se", t.best_separation},
              {"flagged_lambda", t.flagged_lambda}, {"rows", rows}};
}

} // namespace spconf

#endif // SPCONF_IO_HPP
