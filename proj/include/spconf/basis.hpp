#ifndef SPCONF_BASIS_HPP
#define SPCONF_BASIS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "grid_fields.hpp"

namespace spconf {

/// Evaluated spatial basis (constant excluded) with a frequency label and a
/// diagonal roughness penalty weight per column.
struct BasisSet {
  MatrixXd columns;              ///< n x p
  std::vector<int> freq;         ///< |k|_inf of each column
  VectorXd penalty;              ///< diagonal penalty weights, all > 0
  int max_freq = 0;
  std::vector<std::string> names;
  VectorXd sq_norms;             ///< squared column norms
  bool orthogonal = false;       ///< columns mutually orthogonal (diagonal Gram)

  Eigen::Index rows() const noexcept { return columns.rows(); }
  Eigen::Index size() const noexcept { return columns.cols(); }
  bool empty() const noexcept { return columns.cols() == 0; }

  /// Basis from arbitrary evaluated columns; the Gram matrix is inspected to
  /// decide whether the orthogonal fast path applies.
  static BasisSet from_columns(MatrixXd cols, std::vector<int> freq, VectorXd penalty,
                               std::vector<std::string> names = {}) {
    const auto p = cols.cols();
    if (static_cast<Eigen::Index>(freq.size()) != p || penalty.size() != p)
      throw InvalidArgument("basis labels and penalty must have one entry per column");
    if ((penalty.array() <= 0.0).any()) throw InvalidArgument("basis penalty weights must be > 0");
    if (names.empty())
      for (Eigen::Index j = 0; j < p; ++j) names.push_back("basis[" + std::to_string(j) + "]");
    BasisSet b;
    b.max_freq = freq.empty() ? 0 : *std::max_element(freq.begin(), freq.end());
    b.freq = std::move(freq);
    b.penalty = std::move(penalty);
    b.names = std::move(names);
    b.sq_norms = cols.colwise().squaredNorm().transpose();
    const MatrixXd gram = cols.transpose() * cols;
    b.orthogonal = true;
    for (Eigen::Index i = 0; i < p && b.orthogonal; ++i)
      for (Eigen::Index j = i + 1; j < p; ++j)
        if (std::abs(gram(i, j)) > 1e-10 * std::sqrt(gram(i, i) * gram(j, j))) {
          b.orthogonal = false;
          break;
        }
    b.columns = std::move(cols);
    return b;
  }

  static BasisSet empty_basis(Eigen::Index n) {
    return from_columns(MatrixXd(n, 0), {}, VectorXd(0));
  }
};

/// Real Fourier basis cos/sin(2*pi*(k1*x + k2*y)) over lattice frequencies
/// 1 <= |k|_inf <= max_freq, one column pair per +/- frequency pair.
/// Penalty weight of a column with label f is f^(2*order).
inline BasisSet fourier_basis(const LocationGrid& grid, int max_freq, int order = 1) {
  const int limit = grid.side() / 2 - 1;
  if (max_freq < 1 || max_freq > limit)
    throw InvalidArgument("max_freq must be in [1, " + std::to_string(limit) + "] for m = " +
                          std::to_string(grid.side()) + ", got " + std::to_string(max_freq));
  if (order < 0) throw InvalidArgument("penalty order must be >= 0");

  const auto ks = half_plane_frequencies(1, max_freq);
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto p = static_cast<Eigen::Index>(2 * ks.size());
  MatrixXd cols(n, p);
  std::vector<int> freq(p);
  VectorXd penalty(p);
  std::vector<std::string> names(p);
  const detail::WaveEvaluator waves(grid);
  for (std::size_t f = 0; f < ks.size(); ++f) {
    const auto jc = static_cast<Eigen::Index>(2 * f), js = jc + 1;
    const auto [k1, k2] = ks[f];
    waves.for_each(k1, k2, [&](std::size_t i, double c, double s) {
      cols(static_cast<Eigen::Index>(i), jc) = c;
      cols(static_cast<Eigen::Index>(i), js) = s;
    });
    const int label = shell_of(k1, k2);
    freq[jc] = freq[js] = label;
    penalty[jc] = penalty[js] = std::pow(static_cast<double>(label), 2.0 * order);
    const std::string k = "(" + std::to_string(k1) + "," + std::to_string(k2) + ")";
    names[jc] = "cos" + k;
    names[js] = "sin" + k;
  }
  if (!grid.regular()) {
    auto b = BasisSet::from_columns(std::move(cols), std::move(freq), std::move(penalty), std::move(names));
    b.max_freq = max_freq;
    return b;
  }
  // Exact discrete orthogonality holds on the centered lattice for |k_i| < m/2.
  BasisSet b;
  b.sq_norms = cols.colwise().squaredNorm().transpose();
  b.columns = std::move(cols);
  b.freq = std::move(freq);
  b.penalty = std::move(penalty);
  b.names = std::move(names);
  b.max_freq = max_freq;
  b.orthogonal = true;
  return b;
}

/// Keeps exactly the columns whose frequency label is <= cutoff.
inline BasisSet restrict_low_frequency(const BasisSet& b, int cutoff) {
  if (cutoff < 1 || cutoff > b.max_freq)
    throw InvalidArgument("cutoff must be in [1, " + std::to_string(b.max_freq) + "], got " +
                          std::to_string(cutoff));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < b.size(); ++j)
    if (b.freq[j] <= cutoff) keep.push_back(j);
  BasisSet out;
  const auto p = static_cast<Eigen::Index>(keep.size());
  out.columns.resize(b.rows(), p);
  out.penalty.resize(p);
  out.sq_norms.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    out.columns.col(j) = b.columns.col(keep[j]);
    out.penalty[j] = b.penalty[keep[j]];
    out.sq_norms[j] = b.sq_norms[keep[j]];
    out.freq.push_back(b.freq[keep[j]]);
    out.names.push_back(b.names[keep[j]]);
  }
  out.max_freq = cutoff;
  out.orthogonal = b.orthogonal;
  return out;
}

} // namespace spconf

#endif // SPCONF_BASIS_HPP
