#ifndef SPCONF_ESTIMATORS_HPP
#define SPCONF_ESTIMATORS_HPP

// Six estimators of the exposure coefficient. All of them see only the
// observed (Z, C, Y) and the locations.

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "basis.hpp"
#include "dgp.hpp"
#include "pls.hpp"

namespace spconf {

enum class EstimatorKind { NonSpatialOLS, RSR, Spatial, SpatialPlus, GSEM, SpatialPlusLowFreq };

inline constexpr std::array<EstimatorKind, 6> kAllEstimators{
    EstimatorKind::NonSpatialOLS, EstimatorKind::RSR,  EstimatorKind::Spatial,
    EstimatorKind::SpatialPlus,   EstimatorKind::GSEM, EstimatorKind::SpatialPlusLowFreq};

inline std::string_view to_string(EstimatorKind k) {
  switch (k) {
  case EstimatorKind::NonSpatialOLS: return "nonspatial";
  case EstimatorKind::RSR: return "rsr";
  case EstimatorKind::Spatial: return "spatial";
  case EstimatorKind::SpatialPlus: return "spatial_plus";
  case EstimatorKind::GSEM: return "gsem";
  case EstimatorKind::SpatialPlusLowFreq: return "spatial_plus_lowfreq";
  }
  return "?";
}

inline std::optional<EstimatorKind> parse_estimator(std::string_view name) {
  for (auto k : kAllEstimators)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

inline std::string estimator_names() {
  std::string s;
  for (auto k : kAllEstimators) s += (s.empty() ? "" : ", ") + std::string(to_string(k));
  return s;
}

/// A smoothing choice: one value means a fixed lambda, several mean GCV over them.
struct Smoothing {
  std::vector<double> lambdas{0.0};

  static Smoothing fixed(double lambda) { return {{lambda}}; }
  static Smoothing gcv(std::vector<double> grid = default_lambda_grid()) { return {std::move(grid)}; }
  bool is_fixed() const noexcept { return lambdas.size() == 1; }
};

struct EstimateRecord {
  EstimatorKind kind = EstimatorKind::NonSpatialOLS;
  double beta1_hat = 0.0;
  double se = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  std::map<std::string, double> lambdas;
  std::map<std::string, double> edf;
  double aic = 0.0;
  std::map<std::string, double> diagnostics;
};

namespace detail {

inline void check_obs(const Observations& obs) {
  const auto n = static_cast<Eigen::Index>(obs.grid.size());
  if (obs.Z.size() != n || obs.C.size() != n || obs.Y.size() != n)
    throw InvalidArgument("observation vectors must match the grid size");
  if (n <= 3) throw InvalidArgument("need more than 3 observations");
}

inline void check_basis(const Observations& obs, const BasisSet& b) {
  if (!b.empty() && b.rows() != static_cast<Eigen::Index>(obs.grid.size()))
    throw InvalidArgument("basis rows do not match the number of observations");
}

/// [1, cols...]
inline MatrixXd with_intercept(Eigen::Index n, std::initializer_list<const VectorXd*> cols) {
  MatrixXd F(n, static_cast<Eigen::Index>(cols.size()) + 1);
  F.col(0).setOnes();
  Eigen::Index j = 1;
  for (const auto* c : cols) F.col(j++) = *c;
  return F;
}

inline EstimateRecord record_from(EstimatorKind kind, const FitResult& fit, Eigen::Index coef) {
  EstimateRecord r;
  r.kind = kind;
  r.beta1_hat = fit.fixed_coefs[coef];
  r.se = std::sqrt(std::max(fit.cov_fixed(coef, coef), 0.0));
  r.ci95 = {r.beta1_hat - 1.96 * r.se, r.beta1_hat + 1.96 * r.se};
  r.aic = fit.aic;
  r.diagnostics["rcond"] = fit.rcond;
  return r;
}

inline FitResult smooth(const PenalizedDesign& d, const VectorXd& y, const Smoothing& s) {
  if (s.lambdas.empty()) throw InvalidArgument("smoothing needs at least one lambda");
  return s.is_fixed() ? d.fit(y, s.lambdas.front()) : d.select_gcv(y, s.lambdas);
}

inline double variance_share(const VectorXd& part, const VectorXd& whole) {
  const double vw = grid_variance(whole);
  return vw > 0.0 ? grid_variance(part) / vw : 0.0;
}

inline void check_exposure_residual(const VectorXd& rz, const VectorXd& z) {
  const double vz = grid_variance(z);
  if (!(vz > 0.0) || !(grid_variance(rz) >= 1e-12 * vz))
    throw DegenerateResidualError(
        "spatially residualized exposure is numerically zero: the exposure is fully spatial");
}

} // namespace detail

/// OLS of Y on (1, Z, C).
inline EstimateRecord fit_nonspatial(const Observations& obs) {
  detail::check_obs(obs);
  const auto empty = BasisSet::empty_basis(obs.Z.size());
  const PenalizedDesign d(detail::with_intercept(obs.Z.size(), {&obs.Z, &obs.C}), empty, {"intercept", "Z", "C"});
  return detail::record_from(EstimatorKind::NonSpatialOLS, d.fit(obs.Y, 0.0), 1);
}

/// Restricted spatial regression: OLS of Y on (1, Z, C, B_perp) with the basis
/// projected orthogonal to (1, Z, C).
inline EstimateRecord fit_rsr(const Observations& obs, const BasisSet& b) {
  detail::check_obs(obs);
  detail::check_basis(obs, b);
  const MatrixXd F = detail::with_intercept(obs.Z.size(), {&obs.Z, &obs.C});
  BasisSet perp = b.empty() ? BasisSet::empty_basis(obs.Z.size())
                            : BasisSet::from_columns(project_out(b.columns, F), b.freq, b.penalty, b.names);
  const PenalizedDesign d(F, perp, {"intercept", "Z", "C"});
  auto r = detail::record_from(EstimatorKind::RSR, d.fit(obs.Y, 0.0), 1);
  r.edf["outcome"] = static_cast<double>(F.cols() + perp.size());
  return r;
}

/// Outcome model with the penalized basis entered directly.
inline EstimateRecord fit_spatial(const Observations& obs, const BasisSet& b, const Smoothing& smoothing) {
  detail::check_obs(obs);
  detail::check_basis(obs, b);
  const PenalizedDesign d(detail::with_intercept(obs.Z.size(), {&obs.Z, &obs.C}), b, {"intercept", "Z", "C"});
  const auto fit = detail::smooth(d, obs.Y, smoothing);
  auto r = detail::record_from(EstimatorKind::Spatial, fit, 1);
  r.lambdas["outcome"] = fit.lambda;
  r.edf["outcome"] = fit.edf;
  return r;
}

/// Spatial model at each fixed lambda, sharing one factorized design.
inline std::vector<EstimateRecord> fit_spatial_path(const Observations& obs, const BasisSet& b,
                                                    std::span<const double> lambdas) {
  detail::check_obs(obs);
  detail::check_basis(obs, b);
  const PenalizedDesign d(detail::with_intercept(obs.Z.size(), {&obs.Z, &obs.C}), b, {"intercept", "Z", "C"});
  std::vector<EstimateRecord> out;
  for (double lambda : lambdas) {
    const auto fit = d.fit(obs.Y, lambda);
    auto r = detail::record_from(EstimatorKind::Spatial, fit, 1);
    r.lambdas["outcome"] = lambda;
    r.edf["outcome"] = fit.edf;
    out.push_back(std::move(r));
  }
  return out;
}

struct SpatialPlusOptions {
  /// Include the measured covariate in the exposure (first-stage) model.
  bool stage1_include_C = true;
};

namespace detail {

inline EstimateRecord spatial_plus_impl(EstimatorKind kind, const Observations& obs, const BasisSet& b,
                                        const Smoothing& stage1, const Smoothing& stage2,
                                        const SpatialPlusOptions& opt) {
  check_obs(obs);
  check_basis(obs, b);
  const MatrixXd F1 = opt.stage1_include_C ? with_intercept(obs.Z.size(), {&obs.C}) : with_intercept(obs.Z.size(), {});
  std::vector<std::string> names1{"intercept"};
  if (opt.stage1_include_C) names1.push_back("C");
  const PenalizedDesign d1(F1, b, names1);
  const auto fit1 = smooth(d1, obs.Z, stage1);
  const VectorXd& rz = fit1.residuals;
  check_exposure_residual(rz, obs.Z);

  const PenalizedDesign d2(with_intercept(obs.Z.size(), {&rz, &obs.C}), b, {"intercept", "Z_resid", "C"});
  const auto fit2 = smooth(d2, obs.Y, stage2);
  auto r = record_from(kind, fit2, 1);
  r.lambdas["exposure"] = fit1.lambda;
  r.lambdas["outcome"] = fit2.lambda;
  r.edf["exposure"] = fit1.edf;
  r.edf["outcome"] = fit2.edf;
  r.diagnostics["exposure_residual_share"] = variance_share(rz, obs.Z);
  r.diagnostics["rcond_exposure"] = fit1.rcond;
  return r;
}

} // namespace detail

/// Two stages: residualize Z on (1, C) + basis, then regress Y on
/// (1, Z residual, C) + basis. Both stages use `smoothing`. The standard
/// error comes from the second stage alone.
inline EstimateRecord fit_spatial_plus(const Observations& obs, const BasisSet& b, const Smoothing& smoothing,
                                       const SpatialPlusOptions& opt = {}) {
  return detail::spatial_plus_impl(EstimatorKind::SpatialPlus, obs, b, smoothing, smoothing, opt);
}

/// Spatial+ on the columns of `b` with frequency label <= cutoff.
inline EstimateRecord fit_spatial_plus_lowfreq(const Observations& obs, const BasisSet& b, int cutoff,
                                               const Smoothing& smoothing = Smoothing::fixed(0.0),
                                               const SpatialPlusOptions& opt = {}) {
  const BasisSet low = restrict_low_frequency(b, cutoff);
  auto r = detail::spatial_plus_impl(EstimatorKind::SpatialPlusLowFreq, obs, low, smoothing, smoothing, opt);
  r.diagnostics["cutoff"] = cutoff;
  return r;
}

/// Residualize Y, Z and C on (1 + basis), each with its own smoothing
/// selection, then OLS of the Y residual on (1, Z residual, C residual).
inline EstimateRecord fit_gsem(const Observations& obs, const BasisSet& b, const Smoothing& smoothing) {
  detail::check_obs(obs);
  detail::check_basis(obs, b);
  const PenalizedDesign d(detail::with_intercept(obs.Z.size(), {}), b, {"intercept"});
  const auto fy = detail::smooth(d, obs.Y, smoothing);
  const auto fz = detail::smooth(d, obs.Z, smoothing);
  const auto fc = detail::smooth(d, obs.C, smoothing);
  detail::check_exposure_residual(fz.residuals, obs.Z);

  const auto empty = BasisSet::empty_basis(obs.Z.size());
  const PenalizedDesign dr(detail::with_intercept(obs.Z.size(), {&fz.residuals, &fc.residuals}), empty,
                           {"intercept", "Z_resid", "C_resid"});
  auto r = detail::record_from(EstimatorKind::GSEM, dr.fit(fy.residuals, 0.0), 1);
  r.lambdas["Y"] = fy.lambda;
  r.lambdas["Z"] = fz.lambda;
  r.lambdas["C"] = fc.lambda;
  r.edf["Y"] = fy.edf;
  r.edf["Z"] = fz.edf;
  r.edf["C"] = fc.edf;
  r.diagnostics["exposure_residual_share"] = detail::variance_share(fz.residuals, obs.Z);
  return r;
}

/// Estimator choice plus the basis and smoothing settings it runs with.
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::NonSpatialOLS;
  int max_freq = 10;
  int penalty_order = 1;
  Smoothing smoothing = Smoothing::gcv();
  int cutoff = 2;
  bool stage1_include_C = true;

  std::string label() const { return std::string(to_string(kind)); }
  bool uses_basis() const noexcept { return kind != EstimatorKind::NonSpatialOLS; }

  static EstimatorSpec defaults_for(EstimatorKind k) {
    EstimatorSpec s;
    s.kind = k;
    if (k == EstimatorKind::SpatialPlusLowFreq) s.smoothing = Smoothing::fixed(0.0);
    return s;
  }
};

/// Runs one estimator; `basis` must be fourier_basis(obs.grid, spec.max_freq, spec.penalty_order)
/// for estimators that use one.
inline EstimateRecord run_estimator(const Observations& obs, const EstimatorSpec& spec, const BasisSet& basis) {
  const SpatialPlusOptions opt{spec.stage1_include_C};
  switch (spec.kind) {
  case EstimatorKind::NonSpatialOLS: return fit_nonspatial(obs);
  case EstimatorKind::RSR: return fit_rsr(obs, basis);
  case EstimatorKind::Spatial: return fit_spatial(obs, basis, spec.smoothing);
  case EstimatorKind::SpatialPlus: return fit_spatial_plus(obs, basis, spec.smoothing, opt);
  case EstimatorKind::GSEM: return fit_gsem(obs, basis, spec.smoothing);
  case EstimatorKind::SpatialPlusLowFreq:
    return fit_spatial_plus_lowfreq(obs, basis, spec.cutoff, spec.smoothing, opt);
  }
  throw InvalidArgument("unknown estimator");
}

} // namespace spconf

#endif // SPCONF_ESTIMATORS_HPP
