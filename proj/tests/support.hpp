#ifndef SPCONF_TESTS_SUPPORT_HPP
#define SPCONF_TESTS_SUPPORT_HPP

// Reference computations shared by the test suites. They deliberately avoid
// the library's solvers so they can serve as independent oracles.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>

#include "spconf/spconf.hpp"

namespace spconf::ref {

struct OlsFit {
  VectorXd coef;
  VectorXd se;
  double rss = 0.0;
};

/// Least squares via column-pivoted QR with classical standard errors.
inline OlsFit ols(const MatrixXd& X, const VectorXd& y) {
  OlsFit f;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  f.coef = qr.solve(y);
  const VectorXd r = y - X * f.coef;
  f.rss = r.squaredNorm();
  const double s2 = f.rss / static_cast<double>(X.rows() - X.cols());
  const MatrixXd inv = (X.transpose() * X).inverse();
  f.se = (s2 * inv.diagonal().array()).sqrt();
  return f;
}

inline MatrixXd columns(const std::vector<const VectorXd*>& cols, bool intercept = true) {
  const Eigen::Index n = (*cols.begin())->size();
  MatrixXd X(n, static_cast<Eigen::Index>(cols.size()) + (intercept ? 1 : 0));
  Eigen::Index j = 0;
  if (intercept) X.col(j++).setOnes();
  for (const VectorXd* c : cols) X.col(j++) = *c;
  return X;
}

/// Shell energies by the defining double sum over all m*m frequencies,
/// evaluated at the actual point coordinates.
inline std::map<int, double> naive_shell_energy(const VectorXd& values, const LocationGrid& grid) {
  const int m = grid.side();
  const double n = static_cast<double>(grid.size());
  std::map<int, double> e;
  for (int s = 0; s <= m / 2; ++s) e[s] = 0.0;
  for (int v = 0; v < m; ++v)
    for (int u = 0; u < m; ++u) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double col = grid[i].x * m - 0.5, row = grid[i].y * m - 0.5;
        acc += values[static_cast<Eigen::Index>(i)] *
               std::polar(1.0, -2.0 * std::numbers::pi * (u * col + v * row) / m);
      }
      const int fu = u <= m / 2 ? u : u - m;
      const int fv = v <= m / 2 ? v : v - m;
      e[std::max(std::abs(fu), std::abs(fv))] += std::norm(acc) / n;
    }
  return e;
}

/// Penalized objective ||y - F a - B g||^2 + lambda * sum(pen * g^2).
inline double penalized_objective(const VectorXd& y, const MatrixXd& F, const BasisSet& b, double lambda,
                                  const VectorXd& theta) {
  const auto q = F.cols();
  VectorXd r = y - F * theta.head(q);
  double pen = 0.0;
  if (b.size() > 0) {
    const VectorXd g = theta.tail(b.size());
    r -= b.columns * g;
    pen = lambda * (b.penalty.array() * g.array().square()).sum();
  }
  return r.squaredNorm() + pen;
}

/// Central-difference gradient of the penalized objective at a fit (step h),
/// divided by the gradient's natural scale 2*max|[F B]' y|.
inline double relative_fd_gradient(const VectorXd& y, const MatrixXd& F, const BasisSet& b, const FitResult& fit,
                                   double h = 1e-6) {
  const auto q = F.cols(), p = b.size();
  VectorXd theta(q + p);
  theta.head(q) = fit.fixed_coefs;
  if (p > 0) theta.tail(p) = fit.basis_coefs;
  const double lambda = std::isinf(fit.lambda) ? 0.0 : fit.lambda;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < q + p; ++j) {
    if (std::isinf(fit.lambda) && j >= q) continue;  // basis coefficients are pinned at 0
    VectorXd up = theta, dn = theta;
    up[j] += h;
    dn[j] -= h;
    const double g = (penalized_objective(y, F, b, lambda, up) - penalized_objective(y, F, b, lambda, dn)) / (2 * h);
    worst = std::max(worst, std::abs(g));
  }
  double scale = (F.transpose() * y).cwiseAbs().maxCoeff();
  if (p > 0) scale = std::max(scale, (b.columns.transpose() * y).cwiseAbs().maxCoeff());
  return worst / (2.0 * std::max(scale, 1e-300));
}

/// A random but well-posed scenario: S1 and S2 in disjoint bands, every
/// independent component present.
inline ScenarioConfig random_config(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.3, 1.5);
  ScenarioConfig c;
  for (auto& b : c.beta) b = u(rng);
  for (auto& a : c.loadings) a = u(rng);
  c.nu_sd = pos(rng);
  c.sigma = pos(rng);
  c.e_sd = pos(rng);
  c.u_sd = pos(rng);
  std::uniform_int_distribution<int> lo(1, 3);
  const int k1 = lo(rng);
  c.spec_S1 = {1, k1, 0.0, pos(rng)};
  c.spec_S2 = {k1 + 2, std::min(k1 + 6, m / 2 - 1), 0.0, pos(rng)};
  c.spec_C = IidSpec{pos(rng)};
  c.m = m;
  return c;
}

} // namespace spconf::ref

#endif // SPCONF_TESTS_SUPPORT_HPP
