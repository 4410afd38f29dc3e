#include <gtest/gtest.h>

#include "support.hpp"

using namespace spconf;

namespace {

double corr(const VectorXd& a, const VectorXd& b) {
  const VectorXd ca = a.array() - a.mean(), cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

ScenarioConfig quiet_config() {
  ScenarioConfig c;
  c.beta = {0, 0, 0, 0, 0, 0};
  c.loadings = {0, 0, 0};
  c.nu_sd = c.sigma = c.e_sd = c.u_sd = 0.0;
  c.spec_S1.variance = c.spec_S2.variance = 0.0;
  c.spec_C = IidSpec{0.0};
  return c;
}

} // namespace

TEST(Dgp, ConstantOutcome) {
  auto c = ScenarioConfig{};
  c.beta = {2, 0, 0, 0, 0, 0};
  c.sigma = 0.0;
  const auto ds = generate_dataset(c, 3);
  EXPECT_EQ(ds.Y.size(), 32 * 32);
  EXPECT_TRUE((ds.Y.array() == 2.0).all());
}

TEST(Dgp, StructuralReconstruction) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto c = ref::random_config(rng, 24);
    const auto ds = generate_dataset(c, 100 + t);
    const auto& b = c.beta;
    const VectorXd s2p = ds.S2 + ds.E;
    const VectorXd z = c.a1() * ds.S1 + c.a2() * s2p + c.a3() * ds.C + ds.nu;
    const VectorXd y =
        (b[0] + (b[1] * ds.Z + b[2] * ds.C + b[3] * ds.S1 + b[4] * s2p + b[5] * ds.U + ds.eps).array()).matrix();
    EXPECT_LE((ds.Z - z).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + z.cwiseAbs().maxCoeff()));
    EXPECT_LE((ds.Y - y).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + y.cwiseAbs().maxCoeff()));
  }
}

TEST(Dgp, NoiselessOutcomeRecoversCoefficients) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 5; ++t) {
    auto c = ref::random_config(rng, 20);
    c.sigma = 0.0;
    const auto ds = generate_dataset(c, 7 + t);
    const MatrixXd X = ref::columns({&ds.Z, &ds.C, &ds.S1, &ds.S2, &ds.E, &ds.U});
    const VectorXd coef = ref::ols(X, ds.Y).coef;
    const std::array<double, 7> expected{c.beta[0], c.beta[1], c.beta[2], c.beta[3],
                                         c.beta[4], c.beta[4], c.beta[5]};
    for (int j = 0; j < 7; ++j) EXPECT_NEAR(coef[j], expected[j], 1e-8 * (1.0 + std::abs(expected[j]))) << j;
  }
}

TEST(Dgp, UnconfoundedExposureIndependentOfS1) {
  ScenarioConfig c;
  c.loadings = {0, 0, 0.5};
  c.m = 64;
  const auto ds = generate_dataset(c, 44);
  EXPECT_LT(std::abs(corr(ds.Z, ds.S1)), 0.05);
}

TEST(Dgp, SeedsChangeEveryField) {
  ScenarioConfig c;
  c.u_sd = 1.0;
  const auto a = generate_dataset(c, replication_seed(1, 0));
  const auto b = generate_dataset(c, replication_seed(1, 1));
  const auto d = generate_dataset(c, replication_seed(2, 0));
  for (const auto* other : {&b, &d}) {
    EXPECT_FALSE(a.S1 == other->S1);
    EXPECT_FALSE(a.S2 == other->S2);
    EXPECT_FALSE(a.E == other->E);
    EXPECT_FALSE(a.U == other->U);
    EXPECT_FALSE(a.C == other->C);
    EXPECT_FALSE(a.nu == other->nu);
    EXPECT_FALSE(a.eps == other->eps);
  }
  const auto again = generate_dataset(c, replication_seed(1, 0));
  EXPECT_TRUE(a.Y == again.Y);
  EXPECT_TRUE(a.Z == again.Z);
}

TEST(Dgp, SpatialCovariateOption) {
  ScenarioConfig c;
  c.spec_C = SpectralSpec{3, 4, 0.0, 2.0};
  const auto ds = generate_dataset(c, 5);
  EXPECT_NEAR((ds.C.array() - ds.C.mean()).square().mean(), 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(c.var_C(), 2.0);
}

TEST(Dgp, ObservedViewHidesLatents) {
  const auto ds = generate_dataset(ScenarioConfig{}, 1);
  const auto obs = ds.observed();
  EXPECT_TRUE(obs.Z == ds.Z);
  EXPECT_TRUE(obs.C == ds.C);
  EXPECT_TRUE(obs.Y == ds.Y);
  EXPECT_EQ(obs.grid.size(), ds.grid.size());
}

TEST(DgpConfig, Validation) {
  auto bad = [](auto mutate) {
    ScenarioConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](auto& c) { c.nu_sd = -1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& c) { c.sigma = -0.1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& c) { c.e_sd = -1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& c) { c.u_sd = -1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& c) { c.beta[2] = std::nan(""); }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& c) { c.m = 1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](auto& c) { c.spec_S2.k_max = 17; }).validate(), AliasingError);
  EXPECT_THROW(bad([](auto& c) { c.spec_C = IidSpec{-1.0}; }).validate(), InvalidArgument);
  EXPECT_NO_THROW(ScenarioConfig{}.validate());
}

TEST(SpatialFraction, FullySpatialExposure) {
  ScenarioConfig c;
  c.nu_sd = 0.0;
  c.e_sd = 0.0;
  EXPECT_DOUBLE_EQ(exposure_spatial_fraction(generate_dataset(c, 1)), 1.0);
}

TEST(SpatialFraction, PureNoiseExposure) {
  ScenarioConfig c;
  c.loadings = {0, 0, 0};
  c.nu_sd = 1.0;
  EXPECT_NEAR(exposure_spatial_fraction(generate_dataset(c, 1)), 0.0, 1e-12);
}

TEST(SpatialFraction, HalfSpatial) {
  auto c = quiet_config();
  c.loadings = {1, 0, 0};
  c.spec_S1 = {1, 2, 0.0, 1.0};
  c.nu_sd = 1.0;
  c.m = 64;
  EXPECT_NEAR(exposure_spatial_fraction(generate_dataset(c, 9)), 0.5, 0.05);
}

TEST(SpatialFraction, ConstantExposureIsDegenerate) {
  const auto c = quiet_config();
  EXPECT_THROW(exposure_spatial_fraction(generate_dataset(c, 1)), DegenerateExposureError);
  EXPECT_THROW(exposure_spatial_fraction(generate_dataset(c, 1)), DegeneracyError);
}
