#ifndef SPCONF_PLS_HPP
#define SPCONF_PLS_HPP

// Penalized least squares with an unpenalized fixed design F (n x q) and a
// diagonally penalized basis B (n x p):
//
//   minimize |y - F a - B g|^2 + lambda * g' diag(penalty) g
//
// The fixed block is eliminated through its Schur complement
//   S(lambda) = F'F - K' D(lambda)^-1 K,   K = B'F,   D(lambda) = B'B + lambda*diag(penalty)
// so for an orthogonal basis (diagonal B'B) every lambda costs O(p q^2) once
// B'F and B'y are known. Non-orthogonal bases fall back to a dense Cholesky of
// D(lambda).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "basis.hpp"
#include "errors.hpp"

namespace spconf {

inline constexpr double kInfiniteLambda = std::numeric_limits<double>::infinity();
/// Design columns whose normalized residual direction falls below this are collinear.
inline constexpr double kCollinearityThreshold = 1e-10;

struct FitResult {
  VectorXd fixed_coefs;
  VectorXd basis_coefs;
  double lambda = 0.0;
  double edf = 0.0;
  double gcv = 0.0;
  double aic = 0.0;
  double sigma2_hat = 0.0;
  double rss = 0.0;
  double penalized_objective = 0.0;
  MatrixXd cov_fixed;
  VectorXd fitted;
  VectorXd residuals;
  /// Smallest singular value of the column-normalized fixed design after
  /// projecting out the basis span: 0 when a fixed column is in span(F_other, B).
  double rcond = 1.0;
};

/// GCV/AIC ingredients of one point on a smoothing path.
struct LambdaScore {
  double lambda = 0.0;
  double rss = 0.0;
  double edf = 0.0;
  double gcv = 0.0;
  double aic = 0.0;
};

namespace detail {

struct FitStats {
  double sigma2, gcv, aic;
};

inline FitStats fit_stats(double rss, double edf, double n) {
  const double dof = n - edf;
  FitStats s{};
  s.sigma2 = dof > 0.0 ? rss / dof : std::numeric_limits<double>::quiet_NaN();
  s.gcv = dof > 0.0 ? n * rss / (dof * dof) : std::numeric_limits<double>::infinity();
  s.aic = n * std::log(rss / n) + 2.0 * edf;
  return s;
}

/// Columns taking part in the near-null direction `v`.
inline std::vector<std::string> participating(const VectorXd& v, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  const double vmax = v.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (std::abs(v[j]) >= 0.05 * vmax) out.push_back(names[static_cast<std::size_t>(j)]);
  return out;
}

inline std::string join(const std::vector<std::string>& xs) {
  std::string s;
  for (const auto& x : xs) s += (s.empty() ? "" : ", ") + x;
  return s;
}

} // namespace detail

/// A fixed design and basis prepared for repeated solves over responses and
/// smoothing parameters. Holds a reference to the basis, which must outlive it.
class PenalizedDesign {
public:
  PenalizedDesign(MatrixXd fixed, const BasisSet& basis, std::vector<std::string> fixed_names = {})
      : F_(std::move(fixed)), B_(&basis) {
    const auto n = F_.rows(), q = F_.cols();
    if (q == 0) throw InvalidArgument("fixed design needs at least one column");
    if (basis.rows() != n && !(basis.empty() && basis.rows() == 0))
      throw InvalidArgument("basis has " + std::to_string(basis.rows()) + " rows, fixed design has " +
                            std::to_string(n));
    if (fixed_names.empty())
      for (Eigen::Index j = 0; j < q; ++j) fixed_names.push_back("fixed[" + std::to_string(j) + "]");
    if (static_cast<Eigen::Index>(fixed_names.size()) != q)
      throw InvalidArgument("one name per fixed column required");
    names_ = std::move(fixed_names);

    check_fixed_rank();
    FtF_ = F_.transpose() * F_;
    if (p() > 0) {
      K_ = basis.columns.transpose() * F_;
      if (!basis.orthogonal) H_ = basis.columns.transpose() * basis.columns;
    } else {
      K_.resize(0, q);
    }
    check_joint_rank();
  }

  Eigen::Index n() const noexcept { return F_.rows(); }
  Eigen::Index q() const noexcept { return F_.cols(); }
  Eigen::Index p() const noexcept { return B_->size(); }
  const MatrixXd& fixed() const noexcept { return F_; }
  const BasisSet& basis() const noexcept { return *B_; }
  double rcond() const noexcept { return rcond_; }

  FitResult fit(const VectorXd& y, double lambda) const {
    check_response(y, lambda);
    const VectorXd Fty = F_.transpose() * y;
    const VectorXd Bty = p() > 0 ? VectorXd(B_->columns.transpose() * y) : VectorXd(0);
    const Solution s = solve(Fty, Bty, lambda);
    return finish(y, s, lambda);
  }

  /// RSS, EDF, GCV and AIC along a list of smoothing parameters (input order).
  std::vector<LambdaScore> path(const VectorXd& y, std::span<const double> lambdas) const {
    if (y.size() != n()) throw InvalidArgument("response length does not match design");
    const VectorXd Fty = F_.transpose() * y;
    const VectorXd Bty = p() > 0 ? VectorXd(B_->columns.transpose() * y) : VectorXd(0);
    const double yty = y.squaredNorm();
    std::vector<LambdaScore> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
      check_response(y, lambda);
      const Solution s = solve(Fty, Bty, lambda);
      double rss = yty - 2.0 * (s.alpha.dot(Fty) + s.gamma.dot(Bty)) + s.alpha.dot(FtF_ * s.alpha);
      if (p() > 0) {
        rss += 2.0 * s.gamma.dot(K_ * s.alpha) + quad_basis(s.gamma);
      }
      // the expanded form cancels badly near interpolation; recompute directly there
      if (!(rss > 1e-8 * yty)) rss = (y - fitted_values(s)).squaredNorm();
      const auto st = detail::fit_stats(rss, s.edf, static_cast<double>(n()));
      out.push_back({lambda, rss, s.edf, st.gcv, st.aic});
    }
    return out;
  }

  /// Fit minimizing GCV over `grid`; ties go to the smallest lambda.
  FitResult select_gcv(const VectorXd& y, std::span<const double> grid) const {
    if (grid.empty()) throw InvalidArgument("lambda grid is empty");
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InvalidArgument("lambda grid values must be distinct");
    const auto scores = path(y, sorted);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i].gcv < scores[best].gcv) best = i;
    return fit(y, sorted[best]);
  }

private:
  struct Solution {
    VectorXd alpha, gamma;
    double edf = 0.0;
    MatrixXd fixed_block_inv;
  };

  void check_response(const VectorXd& y, double lambda) const {
    if (y.size() != n()) throw InvalidArgument("response length does not match design");
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  }

  double quad_basis(const VectorXd& g) const {
    if (B_->orthogonal) return (B_->sq_norms.array() * g.array().square()).sum();
    return g.dot(H_ * g);
  }

  void check_fixed_rank() const {
    const auto q = F_.cols();
    VectorXd norms = F_.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < q; ++j)
      if (!(norms[j] > 0.0))
        throw CollinearityError("fixed design is rank deficient: column " + names_[j] + " is zero (collinear)",
                                {names_[j]}, 0.0);
    const MatrixXd Fn = F_ * norms.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<MatrixXd> svd(Fn, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double r = sv[q - 1] / sv[0];
    if (r < kCollinearityThreshold) {
      auto cols = detail::participating(svd.matrixV().col(q - 1), names_);
      throw CollinearityError("fixed design is rank deficient (collinear columns: " + detail::join(cols) + ")",
                              cols, r);
    }
  }

  void check_joint_rank() {
    const auto q = F_.cols();
    MatrixXd R = F_;
    if (p() > 0) {
      const auto& b = *B_;
      if (b.orthogonal) {
        const double hmax = b.sq_norms.maxCoeff();
        basis_ok_ = b.sq_norms.minCoeff() > kCollinearityThreshold * kCollinearityThreshold * hmax;
        if (basis_ok_) R.noalias() -= b.columns * (b.sq_norms.cwiseInverse().asDiagonal() * K_);
      } else {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(H_, Eigen::EigenvaluesOnly);
        const auto& ev = eig.eigenvalues();
        basis_ok_ = ev[0] > kCollinearityThreshold * kCollinearityThreshold * ev[ev.size() - 1];
        if (basis_ok_) R.noalias() -= b.columns * H_.llt().solve(K_);
      }
    }
    if (!basis_ok_) {
      rcond_ = 0.0;
      return;
    }
    const VectorXd norms = F_.colwise().norm().transpose();
    R = R * norms.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<MatrixXd> svd(R, Eigen::ComputeThinV);
    rcond_ = svd.singularValues()[q - 1];
    null_dir_ = svd.matrixV().col(q - 1);
  }

  [[noreturn]] void throw_joint_collinear() const {
    if (!basis_ok_)
      throw CollinearityError("basis columns are collinear; joint design is rank deficient", {"basis"}, 0.0);
    auto cols = detail::participating(null_dir_, names_);
    throw CollinearityError("joint design is rank deficient: " + detail::join(cols) +
                                " collinear with the spatial basis",
                            cols, rcond_);
  }

  Solution solve(const VectorXd& Fty, const VectorXd& Bty, double lambda) const {
    Solution s;
    const auto q = F_.cols(), pp = p();
    if (std::isinf(lambda) || pp == 0) {
      Eigen::LDLT<MatrixXd> ldlt(FtF_);
      s.alpha = ldlt.solve(Fty);
      s.gamma = VectorXd::Zero(pp);
      s.edf = static_cast<double>(q);
      s.fixed_block_inv = ldlt.solve(MatrixXd::Identity(q, q));
      return s;
    }
    if (lambda == 0.0 && rcond_ < kCollinearityThreshold) throw_joint_collinear();

    const auto& b = *B_;
    const VectorXd lp = lambda * b.penalty;
    MatrixXd DinvK;
    VectorXd DinvBty;
    VectorXd Dinv_diag;
    std::optional<Eigen::LLT<MatrixXd>> dense;
    if (b.orthogonal) {
      Dinv_diag = (b.sq_norms + lp).cwiseInverse();
      DinvK = Dinv_diag.asDiagonal() * K_;
      DinvBty = Dinv_diag.cwiseProduct(Bty);
    } else {
      MatrixXd D = H_;
      D.diagonal() += lp;
      dense.emplace(D);
      DinvK = dense->solve(K_);
      DinvBty = dense->solve(Bty);
    }
    const MatrixXd S = FtF_ - K_.transpose() * DinvK;
    Eigen::LDLT<MatrixXd> sldlt(S);
    s.fixed_block_inv = sldlt.solve(MatrixXd::Identity(q, q));
    s.alpha = sldlt.solve(Fty - K_.transpose() * DinvBty);
    s.gamma = DinvBty - DinvK * s.alpha;

    // edf = tr(hat) = q + p - lambda * tr(diag(penalty) * [inverse]_basis-block)
    if (lambda == 0.0) {
      s.edf = static_cast<double>(q + pp);
    } else {
      const MatrixXd G = DinvK * s.fixed_block_inv;  // p x q
      const VectorXd corr = (G.array() * DinvK.array()).rowwise().sum();
      VectorXd block_diag;
      if (b.orthogonal) {
        block_diag = Dinv_diag + corr;
      } else {
        block_diag = dense->solve(MatrixXd::Identity(pp, pp)).diagonal() + corr;
      }
      s.edf = static_cast<double>(q + pp) - lp.dot(block_diag);
    }
    return s;
  }

  VectorXd fitted_values(const Solution& s) const {
    VectorXd f = F_ * s.alpha;
    if (p() > 0) f.noalias() += B_->columns * s.gamma;
    return f;
  }

  FitResult finish(const VectorXd& y, const Solution& s, double lambda) const {
    FitResult r;
    r.fixed_coefs = s.alpha;
    r.basis_coefs = s.gamma;
    r.lambda = lambda;
    r.edf = s.edf;
    r.fitted = fitted_values(s);
    r.residuals = y - r.fitted;
    r.rss = r.residuals.squaredNorm();
    const auto st = detail::fit_stats(r.rss, r.edf, static_cast<double>(n()));
    r.sigma2_hat = st.sigma2;
    r.gcv = st.gcv;
    r.aic = st.aic;
    r.penalized_objective = r.rss;
    if (!std::isinf(lambda) && p() > 0)
      r.penalized_objective += lambda * (B_->penalty.array() * s.gamma.array().square()).sum();
    r.cov_fixed = r.sigma2_hat * s.fixed_block_inv;
    r.rcond = rcond_;
    return r;
  }

  MatrixXd F_;
  const BasisSet* B_;
  std::vector<std::string> names_;
  MatrixXd FtF_, K_, H_;
  bool basis_ok_ = true;
  double rcond_ = 1.0;
  VectorXd null_dir_;
};

inline FitResult fit_pls(const VectorXd& y, const MatrixXd& fixed, const BasisSet& b, double lambda,
                         std::vector<std::string> fixed_names = {}) {
  return PenalizedDesign(fixed, b, std::move(fixed_names)).fit(y, lambda);
}

/// Default smoothing grid: 0 followed by 41 log-spaced values in [1e-4, 1e6].
inline std::vector<double> default_lambda_grid() {
  std::vector<double> g{0.0};
  for (int i = 0; i <= 40; ++i) g.push_back(std::pow(10.0, -4.0 + 10.0 * i / 40.0));
  return g;
}

inline FitResult select_lambda_gcv(const VectorXd& y, const MatrixXd& fixed, const BasisSet& b,
                                   std::span<const double> lambda_grid,
                                   std::vector<std::string> fixed_names = {}) {
  return PenalizedDesign(fixed, b, std::move(fixed_names)).select_gcv(y, lambda_grid);
}

/// (I - P) v, with P the orthogonal projector onto the columns of `onto`.
inline MatrixXd project_out(const MatrixXd& v, const MatrixXd& onto) {
  if (v.rows() != onto.rows()) throw InvalidArgument("project_out: row count mismatch");
  const auto q = onto.cols();
  if (q == 0) return v;
  const VectorXd norms = onto.colwise().norm().transpose();
  if (!(norms.minCoeff() > 0.0))
    throw CollinearityError("project_out: target has a zero column (collinear)", {}, 0.0);
  Eigen::JacobiSVD<MatrixXd> svd(onto * norms.cwiseInverse().asDiagonal());
  const auto& sv = svd.singularValues();
  if (sv[q - 1] / sv[0] < kCollinearityThreshold)
    throw CollinearityError("project_out: target is rank deficient (collinear)", {}, sv[q - 1] / sv[0]);
  Eigen::HouseholderQR<MatrixXd> qr(onto);
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(onto.rows(), q);
  MatrixXd out = v - Q * (Q.transpose() * v);
  out -= Q * (Q.transpose() * out);  // second pass keeps the output orthogonal to working precision
  return out;
}

inline VectorXd project_out(const VectorXd& v, const MatrixXd& onto) {
  return project_out(MatrixXd(v), onto).col(0);
}

} // namespace spconf

#endif // SPCONF_PLS_HPP
