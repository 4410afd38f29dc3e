// spconf: command-line front end.
//
// Exit codes: 0 success, 2 usage or config error, 3 I/O error,
// 4 statistical degeneracy (collinear design, undefined estimand).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spconf/spconf.hpp"

namespace {

using namespace spconf;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegenerate = 4;

struct Options {
  unsigned threads = 0;
  std::string config;
  std::string data;
  std::string out;
  std::string json_out;
  std::uint64_t seed = 1;
  bool latent = false;
  std::string field;
  std::string field_out;
  std::vector<std::string> estimators;
  int max_freq = 10;
  int penalty_order = 1;
  std::string lambda;
  int cutoff = 2;
  bool stage1_without_C = false;
  int R = 500;
  std::string scenario = "both";
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Manifest written next to each output file: `<first output>.manifest.json`.
void write_manifest(const std::string& subcommand, const std::vector<std::string>& argv, const Options& o,
                    const std::vector<std::string>& outputs, const std::optional<ScenarioConfig>& cfg) {
  Json m{{"subcommand", subcommand},
         {"argv", argv},
         {"config_path", o.config.empty() ? Json(nullptr) : Json(o.config)},
         {"data_path", o.data.empty() ? Json(nullptr) : Json(o.data)},
         {"outputs", outputs},
         {"master_seed", o.seed},
         {"threads", o.threads},
         {"tool_version", kVersion},
         {"config_hash", cfg ? Json(config_hash(*cfg)) : Json(nullptr)},
         {"config", cfg ? to_json(*cfg) : Json(nullptr)},
         {"timestamp", utc_timestamp()}};
  write_text_file(outputs.front() + ".manifest.json", m.dump(2) + "\n");
}

Smoothing parse_smoothing(const std::string& text, const Smoothing& fallback) {
  if (text.empty()) return fallback;
  if (text == "gcv") return Smoothing::gcv();
  if (text == "inf") return Smoothing::fixed(kInfiniteLambda);
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 0.0))
    throw InvalidArgument("--lambda must be 'gcv', 'inf' or a number >= 0, got '" + text + "'");
  return Smoothing::fixed(v);
}

EstimatorSpec make_spec(const std::string& name, const Options& o) {
  const auto kind = parse_estimator(name);
  if (!kind) throw InvalidArgument("unknown estimator '" + name + "'; valid names: " + estimator_names());
  EstimatorSpec s = EstimatorSpec::defaults_for(*kind);
  s.max_freq = o.max_freq;
  s.penalty_order = o.penalty_order;
  s.smoothing = parse_smoothing(o.lambda, s.smoothing);
  s.cutoff = o.cutoff;
  s.stage1_include_C = !o.stage1_without_C;
  return s;
}

std::vector<EstimatorSpec> make_specs(const Options& o, const std::vector<std::string>& fallback) {
  std::vector<std::string> names;
  for (const auto& entry : o.estimators.empty() ? fallback : o.estimators) {
    std::stringstream ss(entry);
    for (std::string tok; std::getline(ss, tok, ',');)
      if (!tok.empty()) names.push_back(tok);
  }
  std::vector<EstimatorSpec> specs;
  for (const auto& n : names) specs.push_back(make_spec(n, o));
  return specs;
}

std::string to_text(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

int cmd_simulate(const Options& o, const std::vector<std::string>& argv) {
  const ScenarioConfig cfg = load_config(o.config);
  const Dataset ds = generate_dataset(cfg, o.seed);
  std::vector<std::string> outputs{o.out};
  write_text_file(o.out, to_text([&](std::ostream& os) { write_dataset_csv(os, ds, o.latent); }));
  if (!o.field.empty()) {
    const VectorXd* v = nullptr;
    const std::pair<const char*, const VectorXd*> fields[] = {{"S1", &ds.S1}, {"S2", &ds.S2}, {"E", &ds.E},
                                                              {"U", &ds.U},   {"C", &ds.C},   {"nu", &ds.nu},
                                                              {"eps", &ds.eps}, {"Z", &ds.Z}, {"Y", &ds.Y}};
    for (const auto& [name, vec] : fields)
      if (o.field == name) v = vec;
    if (!v) throw InvalidArgument("--field must be one of S1, S2, E, U, C, nu, eps, Z, Y");
    if (o.field_out.empty()) throw InvalidArgument("--field requires --field-out");
    write_text_file(o.field_out, to_text([&](std::ostream& os) { write_field_csv(os, ds.grid, *v); }));
    outputs.push_back(o.field_out);
  }
  write_manifest("simulate", argv, o, outputs, cfg);
  return 0;
}

int cmd_fit(const Options& o) {
  const Observations obs = observations_from_csv(read_text_file(o.data));
  if (o.estimators.size() != 1) throw InvalidArgument("fit takes exactly one --estimator");
  const EstimatorSpec spec = make_spec(o.estimators.front(), o);
  BasisSet basis = BasisSet::empty_basis(static_cast<Eigen::Index>(obs.grid.size()));
  if (spec.uses_basis()) basis = fourier_basis(obs.grid, spec.max_freq, spec.penalty_order);
  const EstimateRecord rec = run_estimator(obs, spec, basis);
  std::cout << to_json(rec).dump(2) << '\n';
  return 0;
}

int cmd_targets(const Options& o) {
  const ScenarioConfig cfg = load_config(o.config);
  std::cout << to_json(compute_estimands(cfg)).dump(2) << '\n';
  return 0;
}

int cmd_mc(const Options& o, const std::vector<std::string>& argv) {
  MCPlan plan;
  plan.config = load_config(o.config);
  plan.estimators = make_specs(o, {"nonspatial,rsr,spatial,spatial_plus,gsem,spatial_plus_lowfreq"});
  plan.R = o.R;
  plan.master_seed = o.seed;
  plan.threads = o.threads;
  const MCSummary s = run_mc(plan);
  std::vector<std::string> outputs{o.out};
  write_text_file(o.out, to_text([&](std::ostream& os) { write_summary_csv(os, s); }));
  if (!o.json_out.empty()) {
    write_text_file(o.json_out, to_json(s, plan).dump(2) + "\n");
    outputs.push_back(o.json_out);
  }
  write_manifest("mc", argv, o, outputs, plan.config);
  return 0;
}

int cmd_scenario(const Options& o, const std::vector<std::string>& argv) {
  std::vector<ScenarioKind> kinds;
  if (o.scenario == "both") {
    kinds = {ScenarioKind::StrongExposureWeakOutcome, ScenarioKind::WeakExposureStrongOutcome};
  } else if (const auto k = parse_scenario(o.scenario)) {
    kinds = {*k};
  } else {
    throw InvalidArgument("--scenario must be 1, 2, both, " + std::string(to_string(ScenarioKind::StrongExposureWeakOutcome)) +
                          " or " + std::string(to_string(ScenarioKind::WeakExposureStrongOutcome)));
  }
  MCPlan base;
  base.config = o.config.empty() ? scenario_base_config() : load_config(o.config);
  base.estimators = {make_spec("spatial", o)};
  base.R = o.R;
  base.master_seed = o.seed;
  base.threads = o.threads;

  std::ostringstream csv;
  csv << "scenario," << kSummaryCsvHeader << '\n';
  Json doc = Json::array();
  for (const auto kind : kinds) {
    const ScenarioOutcome out = scenario_experiment(kind, base);
    const std::string name(to_string(kind));
    write_summary_rows(csv, out.summary, name);
    MCPlan shown = base;
    shown.config = out.config;
    doc.push_back({{"scenario", name}, {"verdict", to_json(out.verdict)}, {"summary", to_json(out.summary, shown)}});
    const auto& v = out.verdict;
    std::cout << name << ": |bias| spatial=" << format_double(std::abs(v.bias_spatial))
              << " spatial_plus=" << format_double(std::abs(v.bias_spatial_plus))
              << " gsem=" << format_double(std::abs(v.bias_gsem))
              << " prediction_holds=" << (v.prediction_holds ? "true" : "false")
              << " separation=" << format_double(v.separation) << '\n';
  }
  std::vector<std::string> outputs{o.out};
  write_text_file(o.out, csv.str());
  if (!o.json_out.empty()) {
    write_text_file(o.json_out, doc.dump(2) + "\n");
    outputs.push_back(o.json_out);
  }
  write_manifest("scenario", argv, o, outputs, base.config);
  return 0;
}

int cmd_aic_bias(const Options& o, const std::vector<std::string>& argv) {
  MCPlan base;
  base.config = o.config.empty() ? ScenarioConfig{} : load_config(o.config);
  base.R = o.R;
  base.master_seed = o.seed;
  base.threads = o.threads;
  const AicBiasTable t = aic_bias_experiment(base, default_lambda_grid(), o.max_freq, o.penalty_order);
  std::vector<std::string> outputs{o.out};
  write_text_file(o.out, to_text([&](std::ostream& os) { write_aic_bias_csv(os, t); }));
  if (!o.json_out.empty()) {
    Json doc = to_json(t);
    doc["provenance"] = {{"config_hash", config_hash(base.config)},
                         {"master_seed", base.master_seed},
                         {"R", base.R},
                         {"config", to_json(base.config)}};
    write_text_file(o.json_out, doc.dump(2) + "\n");
    outputs.push_back(o.json_out);
  }
  std::cout << "flag=" << (t.flag ? "true" : "false") << " best_separation=" << format_double(t.best_separation)
            << " at lambda=" << format_double(t.flagged_lambda) << '\n';
  write_manifest("aic-bias", argv, o, outputs, base.config);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  Options o;
  CLI::App app{"Spatial confounding simulation and estimation lab", "spconf"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.add_option("--threads", o.threads, "worker threads (0 = available cores)");

  auto add_basis = [&](CLI::App* c) {
    c->add_option("--max-freq", o.max_freq, "largest basis frequency")->capture_default_str();
    c->add_option("--penalty-order", o.penalty_order, "penalty order q (weight f^(2q))")->capture_default_str();
  };
  auto add_smoothing = [&](CLI::App* c) {
    c->add_option("--lambda", o.lambda, "smoothing: a number >= 0, 'inf', or 'gcv' (estimator default if omitted)");
    c->add_option("--cutoff", o.cutoff, "frequency cutoff for spatial_plus_lowfreq")->capture_default_str();
    c->add_flag("--stage1-without-C", o.stage1_without_C, "leave C out of the Spatial+ exposure model");
  };

  auto* sim = app.add_subcommand("simulate", "generate one dataset as CSV");
  sim->add_option("--config", o.config, "scenario config (JSON)")->required();
  sim->add_option("--seed", o.seed, "dataset seed")->capture_default_str();
  sim->add_option("--out", o.out, "output CSV")->required();
  sim->add_flag("--latent", o.latent, "also write S1, S2, E, U, nu, eps");
  sim->add_option("--field", o.field, "also export one field as x,y,value (S1, S2, E, U, C, nu, eps, Z, Y)");
  sim->add_option("--field-out", o.field_out, "path for --field");

  auto* fit = app.add_subcommand("fit", "fit one estimator to a dataset CSV; prints JSON");
  fit->add_option("--data", o.data, "dataset CSV with x,y,Z,C,Y")->required();
  fit->add_option("--estimator", o.estimators, "estimator: " + estimator_names())->required();
  add_basis(fit);
  add_smoothing(fit);

  auto* mc = app.add_subcommand("mc", "Monte Carlo study of several estimators");
  mc->add_option("--config", o.config, "scenario config (JSON)")->required();
  mc->add_option("--estimator,--estimators", o.estimators, "comma-separated estimators (default: all)");
  mc->add_option("--R", o.R, "replications")->capture_default_str();
  mc->add_option("--seed", o.seed, "master seed")->capture_default_str();
  mc->add_option("--out", o.out, "summary CSV")->required();
  mc->add_option("--json", o.json_out, "summary JSON with provenance");
  add_basis(mc);
  add_smoothing(mc);

  auto* targets = app.add_subcommand("targets", "print population estimands for a config as JSON");
  targets->add_option("--config", o.config, "scenario config (JSON)")->required();

  auto* scen = app.add_subcommand("scenario", "confounding-scenario comparison of spatial, spatial_plus, gsem");
  scen->add_option("--scenario", o.scenario, "1, 2 or both")->capture_default_str();
  scen->add_option("--config", o.config, "base config (default: built-in scenario base)");
  scen->add_option("--R", o.R, "replications")->capture_default_str();
  scen->add_option("--seed", o.seed, "master seed")->capture_default_str();
  scen->add_option("--out", o.out, "summary CSV")->required();
  scen->add_option("--json", o.json_out, "summaries and verdicts as JSON");
  add_basis(scen);
  scen->add_option("--lambda", o.lambda, "smoothing: a number >= 0, 'inf', or 'gcv'")->default_str("gcv");

  auto* aic = app.add_subcommand("aic-bias", "mean AIC and bias of the spatial model across the lambda grid");
  aic->add_option("--config", o.config, "config (default: built-in defaults)");
  aic->add_option("--R", o.R, "replications")->default_val(300);
  aic->add_option("--seed", o.seed, "master seed")->capture_default_str();
  aic->add_option("--out", o.out, "table CSV")->required();
  aic->add_option("--json", o.json_out, "table JSON with provenance");
  add_basis(aic);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(o, args);
    if (*fit) return cmd_fit(o);
    if (*mc) return cmd_mc(o, args);
    if (*targets) return cmd_targets(o);
    if (*scen) return cmd_scenario(o, args);
    if (*aic) return cmd_aic_bias(o, args);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DegeneracyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
