#ifndef SPCONF_DGP_HPP
#define SPCONF_DGP_HPP

// Data-generating process: an additive outcome model with a linearly
// confounded exposure.
//
//   Z = a1*S1 + a2*(S2 + E) + a3*C + nu
//   Y = b0 + b1*Z + b2*C + b3*S1 + b4*(S2 + E) + b5*U + eps
//
// S1, S2 are completely spatial (band-limited); E, U, nu, eps are iid; C is
// either. All sources are drawn independently.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "grid_fields.hpp"

namespace spconf {

struct ScenarioConfig {
  std::array<double, 6> beta{0.0, 2.0, 1.0, 1.0, 1.0, 0.0};
  /// exposure loadings on S1, S2+ and C
  std::array<double, 3> loadings{1.0, 1.0, 0.5};
  double nu_sd = 1.0;
  double sigma = 0.5;
  SpectralSpec spec_S1{1, 2, 0.0, 1.0};
  SpectralSpec spec_S2{6, 10, 0.0, 1.0};
  FieldSpec spec_C = IidSpec{1.0};
  double e_sd = 0.5;
  double u_sd = 0.0;
  int m = 32;

  double a1() const noexcept { return loadings[0]; }
  double a2() const noexcept { return loadings[1]; }
  double a3() const noexcept { return loadings[2]; }

  /// Marginal variance of C implied by its spec.
  double var_C() const {
    if (const auto* s = std::get_if<SpectralSpec>(&spec_C)) return s->variance;
    const double sd = std::get<IidSpec>(spec_C).sd;
    return sd * sd;
  }

  void validate() const {
    if (m < 2 || m > LocationGrid::kMaxSide)
      throw InvalidArgument("m must be in [2, 512], got " + std::to_string(m));
    for (std::size_t i = 0; i < beta.size(); ++i)
      if (!std::isfinite(beta[i])) throw InvalidArgument("beta[" + std::to_string(i) + "] is not finite");
    for (std::size_t i = 0; i < loadings.size(); ++i)
      if (!std::isfinite(loadings[i]))
        throw InvalidArgument("loadings[" + std::to_string(i) + "] is not finite");
    auto check_sd = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be finite and >= 0");
    };
    check_sd(nu_sd, "nu_sd");
    check_sd(sigma, "sigma");
    check_sd(e_sd, "e_sd");
    check_sd(u_sd, "u_sd");
    auto check_spec = [this](const SpectralSpec& s, const char* name) {
      try {
        s.validate();
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(name) + ": " + e.what());
      }
      if (2 * s.k_max > m) throw AliasingError(std::string(name) + ": k_max exceeds m/2");
    };
    check_spec(spec_S1, "spec_S1");
    check_spec(spec_S2, "spec_S2");
    if (const auto* s = std::get_if<SpectralSpec>(&spec_C))
      check_spec(*s, "spec_C");
    else
      check_sd(std::get<IidSpec>(spec_C).sd, "spec_C.sd");
  }
};

/// What an analyst sees: exposure, measured covariate, outcome, locations.
struct Observations {
  LocationGrid grid;
  VectorXd Z, C, Y;
};

struct Dataset {
  LocationGrid grid;
  VectorXd Z, C, Y;
  VectorXd S1, S2, E, U, nu, eps;
  ScenarioConfig config;
  std::uint64_t seed = 0;

  Observations observed() const { return {grid, Z, C, Y}; }
};

inline Dataset generate_dataset(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Dataset ds;
  ds.grid = make_grid(cfg.m);
  ds.config = cfg;
  ds.seed = seed;
  const auto& g = ds.grid;
  ds.S1 = sample_grf(g, cfg.spec_S1, field_seed(seed, "S1")).values;
  ds.S2 = sample_grf(g, cfg.spec_S2, field_seed(seed, "S2")).values;
  ds.E = sample_iid(g, cfg.e_sd, field_seed(seed, "E")).values;
  ds.U = sample_iid(g, cfg.u_sd, field_seed(seed, "U")).values;
  ds.C = sample_field(g, cfg.spec_C, field_seed(seed, "C")).values;
  ds.nu = sample_iid(g, cfg.nu_sd, field_seed(seed, "nu")).values;
  ds.eps = sample_iid(g, cfg.sigma, field_seed(seed, "eps")).values;

  const auto& b = cfg.beta;
  const VectorXd s2plus = ds.S2 + ds.E;
  ds.Z = cfg.a1() * ds.S1 + cfg.a2() * s2plus + cfg.a3() * ds.C + ds.nu;
  ds.Y = (b[0] + (b[1] * ds.Z + b[2] * ds.C + b[3] * ds.S1 + b[4] * s2plus + b[5] * ds.U + ds.eps).array())
             .matrix();
  return ds;
}

/// Share of the exposure's grid variance carried by everything except its
/// independent parts nu and a2*E. The measured covariate C counts toward the
/// retained share since every estimator conditions on it.
inline double exposure_spatial_fraction(const Dataset& ds) {
  const double vz = detail::grid_variance(ds.Z);
  if (!(vz > 0.0)) throw DegenerateExposureError("exposure has zero variance");
  const VectorXd spatial = ds.Z - ds.nu - ds.config.a2() * ds.E;
  return std::clamp(detail::grid_variance(spatial) / vz, 0.0, 1.0);
}

} // namespace spconf

#endif // SPCONF_DGP_HPP
