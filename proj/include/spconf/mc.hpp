#ifndef SPCONF_MC_HPP
#define SPCONF_MC_HPP

// Monte Carlo harness. Replications are independent work units seeded from
// (master_seed, replication index); per-replication results are stored by
// index and reduced in index order, so summaries do not depend on the number
// of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "basis.hpp"
#include "config_json.hpp"
#include "dgp.hpp"
#include "estimators.hpp"
#include "oracle.hpp"

namespace spconf {

struct MCPlan {
  ScenarioConfig config;
  std::vector<EstimatorSpec> estimators;
  int R = 500;
  std::uint64_t master_seed = 1;
  /// worker threads; 0 = hardware concurrency
  unsigned threads = 0;

  void validate() const {
    config.validate();
    if (R < 1) throw InvalidArgument("replication count R must be >= 1");
    if (estimators.empty()) throw InvalidArgument("plan needs at least one estimator");
    const int limit = config.m / 2 - 1;
    for (const auto& e : estimators)
      if (e.uses_basis() && (e.max_freq < 1 || e.max_freq > limit))
        throw InvalidArgument(e.label() + ": max_freq must be in [1, " + std::to_string(limit) + "]");
  }
};

struct MCCell {
  std::string estimator;
  std::string target;
  double target_value = 0.0;
  double mean_estimate = 0.0;
  double mean_bias = 0.0;
  double mc_se_of_bias = 0.0;  ///< sample SD / sqrt(successes); NaN below 2 successes
  double sd = 0.0;             ///< divisor = successes, so rmse^2 = mean_bias^2 + sd^2
  bool sd_defined = false;     ///< at least 2 successful replications
  double rmse = 0.0;
  double coverage95 = 0.0;
  double mean_aic = 0.0;
  int n_success = 0;
  int n_failed = 0;
};

struct MCSummary {
  std::vector<MCCell> cells;
  std::vector<std::string> estimator_labels;
  /// per estimator, per replication; NaN marks a failed replication
  std::vector<std::vector<double>> estimates;
  /// per estimator: failure message -> count
  std::vector<std::map<std::string, int>> failures;
  EstimandSet targets;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  int R = 0;

  const MCCell* cell(const std::string& estimator, const std::string& target) const {
    for (const auto& c : cells)
      if (c.estimator == estimator && c.target == target) return &c;
    return nullptr;
  }
};

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Calls fn(i) for i in [0, count) on `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
  }
  if (first_error) std::rethrow_exception(first_error);
}

/// Basis objects keyed by (max_freq, penalty order), built once per plan.
class BasisCache {
public:
  BasisCache(const LocationGrid& grid, const std::vector<EstimatorSpec>& specs) {
    for (const auto& s : specs)
      if (s.uses_basis()) {
        const auto key = std::make_pair(s.max_freq, s.penalty_order);
        if (!bases_.count(key)) bases_.emplace(key, fourier_basis(grid, s.max_freq, s.penalty_order));
      }
    empty_ = BasisSet::empty_basis(static_cast<Eigen::Index>(grid.size()));
  }

  const BasisSet& get(const EstimatorSpec& s) const {
    if (!s.uses_basis()) return empty_;
    return bases_.at({s.max_freq, s.penalty_order});
  }

private:
  std::map<std::pair<int, int>, BasisSet> bases_;
  BasisSet empty_;
};

namespace detail {

struct RepResult {
  bool ok = false;
  double beta = 0.0, lo = 0.0, hi = 0.0, aic = 0.0;
  std::string error;
};

inline MCCell summarize_cell(const std::string& est, const std::string& target, double t,
                             const std::vector<RepResult>& reps) {
  MCCell c;
  c.estimator = est;
  c.target = target;
  c.target_value = t;
  double sum = 0.0, sum_aic = 0.0, covered = 0.0;
  for (const auto& r : reps) {
    if (!r.ok) {
      ++c.n_failed;
      continue;
    }
    ++c.n_success;
    sum += r.beta;
    sum_aic += r.aic;
    if (r.lo <= t && t <= r.hi) covered += 1.0;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (c.n_success == 0) {
    c.mean_estimate = c.mean_bias = c.mc_se_of_bias = c.sd = c.rmse = c.coverage95 = c.mean_aic = nan;
    return c;
  }
  const double k = c.n_success;
  c.mean_estimate = sum / k;
  c.mean_bias = c.mean_estimate - t;
  double ss = 0.0, sq_bias = 0.0;
  for (const auto& r : reps)
    if (r.ok) {
      ss += (r.beta - c.mean_estimate) * (r.beta - c.mean_estimate);
      sq_bias += (r.beta - t) * (r.beta - t);
    }
  c.sd = std::sqrt(ss / k);
  c.sd_defined = c.n_success >= 2;
  c.mc_se_of_bias = c.sd_defined ? std::sqrt(ss / (k - 1.0)) / std::sqrt(k) : nan;
  c.rmse = std::sqrt(sq_bias / k);
  c.coverage95 = covered / k;
  c.mean_aic = sum_aic / k;
  return c;
}

} // namespace detail

inline MCSummary run_mc(const MCPlan& plan) {
  plan.validate();
  const LocationGrid grid = make_grid(plan.config.m);
  const BasisCache cache(grid, plan.estimators);
  const std::size_t E = plan.estimators.size();
  const auto R = static_cast<std::size_t>(plan.R);
  std::vector<std::vector<detail::RepResult>> results(E, std::vector<detail::RepResult>(R));

  parallel_for(R, plan.threads, [&](std::size_t rep) {
    const Dataset ds = generate_dataset(plan.config, replication_seed(plan.master_seed, rep));
    const Observations obs = ds.observed();
    for (std::size_t e = 0; e < E; ++e) {
      auto& out = results[e][rep];
      try {
        const auto rec = run_estimator(obs, plan.estimators[e], cache.get(plan.estimators[e]));
        out = {true, rec.beta1_hat, rec.ci95.first, rec.ci95.second, rec.aic, {}};
      } catch (const std::exception& ex) {
        out.ok = false;
        out.error = ex.what();
      }
    }
  });

  MCSummary s;
  s.targets = estimands_or_undefined(plan.config);
  s.config_hash = config_hash(plan.config);
  s.master_seed = plan.master_seed;
  s.R = plan.R;
  const auto targets = s.targets.defined();
  for (std::size_t e = 0; e < E; ++e) {
    const auto label = plan.estimators[e].label();
    s.estimator_labels.push_back(label);
    std::vector<double> est(R);
    std::map<std::string, int> fails;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& rr = results[e][r];
      est[r] = rr.ok ? rr.beta : std::numeric_limits<double>::quiet_NaN();
      if (!rr.ok) ++fails[rr.error];
    }
    s.estimates.push_back(std::move(est));
    s.failures.push_back(std::move(fails));
    for (const auto& [name, value] : targets) s.cells.push_back(detail::summarize_cell(label, name, value, results[e]));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Confounding-scenario experiments

enum class ScenarioKind { StrongExposureWeakOutcome, WeakExposureStrongOutcome };

inline std::string_view to_string(ScenarioKind k) {
  return k == ScenarioKind::StrongExposureWeakOutcome ? "strong-exposure-weak-outcome"
                                                      : "weak-exposure-strong-outcome";
}

inline std::optional<ScenarioKind> parse_scenario(std::string_view s) {
  if (s == "strong-exposure-weak-outcome" || s == "1") return ScenarioKind::StrongExposureWeakOutcome;
  if (s == "weak-exposure-strong-outcome" || s == "2") return ScenarioKind::WeakExposureStrongOutcome;
  return std::nullopt;
}

/// Loading of S2+ on the exposure and its outcome coefficient per scenario.
struct ScenarioStrengths {
  double a2;
  double beta4;
};

inline ScenarioStrengths scenario_strengths(ScenarioKind k) {
  return k == ScenarioKind::StrongExposureWeakOutcome ? ScenarioStrengths{2.0, 0.2} : ScenarioStrengths{0.2, 2.0};
}

/// Defaults the scenario experiments are calibrated on.
inline ScenarioConfig scenario_base_config() {
  ScenarioConfig c;
  c.m = 32;
  c.spec_S1 = {1, 2, 0.0, 1.0};
  c.spec_S2 = {6, 10, 0.0, 1.0};
  c.e_sd = 0.5;
  c.spec_C = IidSpec{1.0};
  c.beta = {0.0, 2.0, 1.0, 1.0, 1.0, 0.0};
  c.loadings = {1.0, 1.0, 0.5};
  c.nu_sd = 1.0;
  c.sigma = 0.5;
  c.u_sd = 0.0;
  return c;
}

inline ScenarioConfig scenario_config(ScenarioKind k, ScenarioConfig base) {
  const auto s = scenario_strengths(k);
  base.loadings[1] = s.a2;
  base.beta[4] = s.beta4;
  return base;
}

struct ScenarioVerdict {
  std::string target = "beta_cond_achieved";
  double bias_spatial = 0.0, se_spatial = 0.0;
  double bias_spatial_plus = 0.0, se_spatial_plus = 0.0;
  double bias_gsem = 0.0, se_gsem = 0.0;
  /// the scenario's predicted ordering of |bias| between Spatial and Spatial+ holds
  bool prediction_holds = false;
  /// (|bias| of the predicted-worse method - |bias| of the predicted-better) / combined MC-SE
  double separation = 0.0;
  /// |bias(gSEM)| <= max(|bias(Spatial)|, |bias(Spatial+)|)
  bool gsem_no_worse_than_max = false;
};

struct ScenarioOutcome {
  ScenarioKind kind{};
  ScenarioConfig config;
  MCSummary summary;
  ScenarioVerdict verdict;
};

/// Runs Spatial, Spatial+ and gSEM under one confounding scenario. Basis and
/// smoothing come from the first basis-using estimator of `base` (defaults if
/// none); its own estimator list is otherwise ignored.
inline ScenarioOutcome scenario_experiment(ScenarioKind kind, const MCPlan& base) {
  const auto& b = base.config;
  if (!(b.spec_S2.variance > 0.0) || b.spec_S2.k_min <= b.spec_S1.k_max)
    throw InvalidArgument("scenario experiments need a nonzero S2 band strictly above the S1 band");
  EstimatorSpec proto = EstimatorSpec::defaults_for(EstimatorKind::Spatial);
  for (const auto& e : base.estimators)
    if (e.uses_basis()) {
      proto = e;
      break;
    }
  MCPlan plan = base;
  plan.config = scenario_config(kind, base.config);
  plan.estimators.clear();
  for (auto k : {EstimatorKind::Spatial, EstimatorKind::SpatialPlus, EstimatorKind::GSEM}) {
    EstimatorSpec s = proto;
    s.kind = k;
    plan.estimators.push_back(s);
  }
  ScenarioOutcome out;
  out.kind = kind;
  out.config = plan.config;
  out.summary = run_mc(plan);

  auto& v = out.verdict;
  auto pick = [&](const char* est, double& bias, double& se) {
    const auto* c = out.summary.cell(est, v.target);
    if (!c) throw EstimandUndefinedError("beta_cond_achieved undefined for this scenario");
    bias = c->mean_bias;
    se = c->mc_se_of_bias;
  };
  pick("spatial", v.bias_spatial, v.se_spatial);
  pick("spatial_plus", v.bias_spatial_plus, v.se_spatial_plus);
  pick("gsem", v.bias_gsem, v.se_gsem);
  const double combined = std::hypot(v.se_spatial, v.se_spatial_plus);
  const double abs_s = std::abs(v.bias_spatial), abs_sp = std::abs(v.bias_spatial_plus);
  if (kind == ScenarioKind::StrongExposureWeakOutcome) {
    v.prediction_holds = abs_sp < abs_s;
    v.separation = (abs_s - abs_sp) / combined;
  } else {
    v.prediction_holds = abs_s < abs_sp;
    v.separation = (abs_sp - abs_s) / combined;
  }
  v.gsem_no_worse_than_max = std::abs(v.bias_gsem) <= std::max(abs_s, abs_sp);
  return out;
}

// ---------------------------------------------------------------------------
// Smoothing vs. fit criterion

struct AicBiasRow {
  double lambda = 0.0;
  double mean_aic = 0.0;
  double mean_edf = 0.0;
  double mean_bias = 0.0;
  double abs_bias = 0.0;
  double mc_se = 0.0;
  int n_success = 0;
};

struct AicBiasTable {
  std::string target = "beta_cond_achieved";
  double target_value = 0.0;
  std::vector<AicBiasRow> rows;
  /// some lambda has lower mean AIC than the reference (smallest) lambda
  /// while its |mean bias| exceeds the reference's by > 2 combined MC-SEs
  bool flag = false;
  /// largest such excess in combined MC-SE units among lower-AIC rows
  double best_separation = -std::numeric_limits<double>::infinity();
  double flagged_lambda = std::numeric_limits<double>::quiet_NaN();
};

/// Spatial model at every fixed lambda of the grid; bias against the
/// achieved spatially-conditional estimand. The smallest lambda (normally 0)
/// is the reference row.
inline AicBiasTable aic_bias_experiment(const MCPlan& base, std::vector<double> lambda_grid,
                                        int max_freq = 10, int penalty_order = 1) {
  base.config.validate();
  if (lambda_grid.empty()) throw InvalidArgument("lambda grid is empty");
  if (base.R < 2) throw InvalidArgument("aic-bias experiment needs R >= 2");
  std::sort(lambda_grid.begin(), lambda_grid.end());
  const auto est = estimands_or_undefined(base.config);
  if (!est.beta_cond_achieved) throw EstimandUndefinedError("estimand undefined: beta_cond_achieved");
  const LocationGrid grid = make_grid(base.config.m);
  const BasisSet basis = fourier_basis(grid, max_freq, penalty_order);
  const std::size_t L = lambda_grid.size(), R = static_cast<std::size_t>(base.R);
  struct Point {
    double beta, aic, edf;
  };
  std::vector<std::vector<Point>> per_rep(R);  // one Point per lambda; empty on failure

  parallel_for(R, base.threads, [&](std::size_t rep) {
    const Dataset ds = generate_dataset(base.config, replication_seed(base.master_seed, rep));
    try {
      const auto recs = fit_spatial_path(ds.observed(), basis, lambda_grid);
      auto& row = per_rep[rep];
      for (const auto& r : recs) row.push_back({r.beta1_hat, r.aic, r.edf.at("outcome")});
    } catch (const std::exception&) {
      per_rep[rep].clear();
    }
  });

  AicBiasTable t;
  t.target_value = *est.beta_cond_achieved;
  for (std::size_t l = 0; l < L; ++l) {
    AicBiasRow row;
    row.lambda = lambda_grid[l];
    double sb = 0.0, sa = 0.0, se = 0.0;
    for (const auto& rep : per_rep)
      if (!rep.empty()) {
        ++row.n_success;
        sb += rep[l].beta;
        sa += rep[l].aic;
        se += rep[l].edf;
      }
    const double k = row.n_success;
    row.mean_bias = sb / k - t.target_value;
    row.abs_bias = std::abs(row.mean_bias);
    row.mean_aic = sa / k;
    row.mean_edf = se / k;
    double ss = 0.0;
    for (const auto& rep : per_rep)
      if (!rep.empty()) ss += std::pow(rep[l].beta - sb / k, 2);
    row.mc_se = k > 1 ? std::sqrt(ss / (k - 1.0) / k) : std::numeric_limits<double>::quiet_NaN();
    t.rows.push_back(row);
  }
  const auto& ref = t.rows.front();
  for (std::size_t l = 1; l < L; ++l) {
    const auto& r = t.rows[l];
    if (!(r.mean_aic < ref.mean_aic)) continue;
    const double sep = (r.abs_bias - ref.abs_bias) / std::hypot(r.mc_se, ref.mc_se);
    if (sep > t.best_separation) {
      t.best_separation = sep;
      t.flagged_lambda = r.lambda;
    }
  }
  t.flag = t.best_separation > 2.0;
  return t;
}

} // namespace spconf

#endif // SPCONF_MC_HPP
