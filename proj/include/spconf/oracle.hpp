#ifndef SPCONF_ORACLE_HPP
#define SPCONF_ORACLE_HPP

// Population estimands as linear-projection coefficients computed from the
// scenario's covariance algebra. All sources (S1, S2, C, E, U, nu, eps) are
// independent, so only their marginal variances enter.

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dgp.hpp"
#include "errors.hpp"

namespace spconf {

/// Row/column order of population_covariance.
enum PopVar : int { kY = 0, kZ, kC, kS1, kS2, kE, kU, kNumPopVars };

inline constexpr std::array<const char*, kNumPopVars> kPopVarNames{"Y", "Z", "C", "S1", "S2", "E", "U"};

/// Covariance over (Y, Z, C, S1, S2, E, U).
inline MatrixXd population_covariance(const ScenarioConfig& cfg) {
  cfg.validate();
  // sources: S1, S2, C, E, U, nu, eps
  constexpr int ns = 7;
  VectorXd var(ns);
  var << cfg.spec_S1.variance, cfg.spec_S2.variance, cfg.var_C(), cfg.e_sd * cfg.e_sd, cfg.u_sd * cfg.u_sd,
      cfg.nu_sd * cfg.nu_sd, cfg.sigma * cfg.sigma;
  MatrixXd L = MatrixXd::Zero(kNumPopVars, ns);
  L(kS1, 0) = 1.0;
  L(kS2, 1) = 1.0;
  L(kC, 2) = 1.0;
  L(kE, 3) = 1.0;
  L(kU, 4) = 1.0;
  L(kZ, 0) = cfg.a1();
  L(kZ, 1) = cfg.a2();
  L(kZ, 2) = cfg.a3();
  L(kZ, 3) = cfg.a2();
  L(kZ, 5) = 1.0;
  const auto& b = cfg.beta;
  L.row(kY) = b[1] * L.row(kZ);
  L(kY, 0) += b[3];
  L(kY, 1) += b[4];
  L(kY, 2) += b[2];
  L(kY, 3) += b[4];
  L(kY, 4) += b[5];
  L(kY, 6) += 1.0;
  MatrixXd cov = L * var.asDiagonal() * L.transpose();
  return 0.5 * (cov + cov.transpose());
}

/// Coefficient of Z when Y is projected on Z and the `given` variables.
/// Empty when Z has no variance left after conditioning.
inline std::optional<double> projection_coefficient(const MatrixXd& cov, const std::vector<int>& given) {
  const double vz = cov(kZ, kZ);
  if (!(vz > 0.0)) return std::nullopt;
  double var_res = vz, cov_res = cov(kZ, kY);
  if (!given.empty()) {
    const auto k = static_cast<Eigen::Index>(given.size());
    MatrixXd Sww(k, k);
    VectorXd Swz(k), Swy(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      Swz[i] = cov(given[i], kZ);
      Swy[i] = cov(given[i], kY);
      for (Eigen::Index j = 0; j < k; ++j) Sww(i, j) = cov(given[i], given[j]);
    }
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Sww);
    cod.setThreshold(1e-12);
    var_res -= Swz.dot(cod.solve(Swz));
    cov_res -= Swz.dot(cod.solve(Swy));
  }
  if (!(var_res > 1e-12 * vz)) return std::nullopt;
  return cov_res / var_res;
}

struct EstimandSet {
  double beta_structural = 0.0;
  /// projection of Y on (1, Z, C)
  std::optional<double> beta_uncond;
  /// projection of Y on (1, Z, C, S1, S2)
  std::optional<double> beta_cond_achieved;
  /// projection of Y on (1, Z, C, S1)
  std::optional<double> beta_cond_S1;

  /// (name, value) of every defined estimand.
  std::vector<std::pair<std::string, double>> defined() const {
    std::vector<std::pair<std::string, double>> out{{"beta_structural", beta_structural}};
    if (beta_uncond) out.emplace_back("beta_uncond", *beta_uncond);
    if (beta_cond_achieved) out.emplace_back("beta_cond_achieved", *beta_cond_achieved);
    if (beta_cond_S1) out.emplace_back("beta_cond_S1", *beta_cond_S1);
    return out;
  }
};

/// Estimands with undefined ones left empty.
inline EstimandSet estimands_or_undefined(const ScenarioConfig& cfg) {
  const MatrixXd cov = population_covariance(cfg);
  EstimandSet e;
  e.beta_structural = cfg.beta[1];
  e.beta_uncond = projection_coefficient(cov, {kC});
  e.beta_cond_achieved = projection_coefficient(cov, {kC, kS1, kS2});
  e.beta_cond_S1 = projection_coefficient(cov, {kC, kS1});
  return e;
}

/// All estimands; throws EstimandUndefinedError when a conditioning set
/// absorbs the exposure entirely.
inline EstimandSet compute_estimands(const ScenarioConfig& cfg) {
  auto e = estimands_or_undefined(cfg);
  std::string missing;
  if (!e.beta_uncond) missing += " beta_uncond";
  if (!e.beta_cond_achieved) missing += " beta_cond_achieved";
  if (!e.beta_cond_S1) missing += " beta_cond_S1";
  if (!missing.empty())
    throw EstimandUndefinedError("estimand undefined (exposure collinear with the conditioning set):" + missing);
  return e;
}

/// beta1 + beta4*a2*e^2 / (a2^2*e^2 + nu^2): the exposure coefficient after
/// conditioning on the completely spatial fields, which leaves the E part of
/// S2+ as a confounder.
inline std::optional<double> achieved_closed_form(const ScenarioConfig& cfg) {
  const double e2 = cfg.e_sd * cfg.e_sd, a2 = cfg.a2();
  const double den = a2 * a2 * e2 + cfg.nu_sd * cfg.nu_sd;
  if (!(den > 0.0)) return std::nullopt;
  return cfg.beta[1] + cfg.beta[4] * a2 * e2 / den;
}

} // namespace spconf

#endif // SPCONF_ORACLE_HPP
