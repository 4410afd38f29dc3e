#ifndef SPCONF_GRID_FIELDS_HPP
#define SPCONF_GRID_FIELDS_HPP

// Spatial domain on the unit square and random fields sampled on it.
//
// "Completely spatial" fields are band-limited Fourier syntheses: a finite sum
// of cos/sin waves whose integer frequency pairs k lie in an infinity-norm
// shell range [k_min, k_max]. Independent fields are iid normal per location.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace spconf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// n = m*m locations in [0,1]^2. Points built by make_grid sit at cell centers
/// in row-major order (x fastest). A grid whose points are a permutation of the
/// centered lattice is "regular" and remembers each point's lattice indices.
class LocationGrid {
public:
  static constexpr int kMaxSide = 512;

  LocationGrid() = default;

  /// Grid from explicit points, e.g. rows of an imported dataset.
  static LocationGrid from_points(int m, std::vector<Point> points) {
    if (m < 2 || m > kMaxSide)
      throw InvalidArgument("grid side m must be in [2, 512], got " + std::to_string(m));
    if (points.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
      throw InvalidArgument("grid of side " + std::to_string(m) + " needs " +
                            std::to_string(m * m) + " points, got " +
                            std::to_string(points.size()));
    LocationGrid g;
    g.m_ = m;
    g.points_ = std::move(points);
    g.detect_lattice();
    return g;
  }

  int side() const noexcept { return m_; }
  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<Point>& points() const noexcept { return points_; }
  const Point& operator[](std::size_t i) const { return points_[i]; }

  bool regular() const noexcept { return !ix_.empty(); }
  /// Lattice column (x index) of point i; only meaningful when regular().
  int lattice_x(std::size_t i) const { return ix_[i]; }
  int lattice_y(std::size_t i) const { return iy_[i]; }

  /// Same locations in the order given by `perm` (new i holds old perm[i]).
  LocationGrid permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != size()) throw InvalidArgument("permutation length mismatch");
    std::vector<Point> p(size());
    for (std::size_t i = 0; i < perm.size(); ++i) p[i] = points_.at(perm[i]);
    return from_points(m_, std::move(p));
  }

private:
  void detect_lattice() {
    const double md = m_;
    std::vector<int> ix(size()), iy(size());
    std::vector<char> seen(size(), 0);
    for (std::size_t i = 0; i < size(); ++i) {
      const double fx = points_[i].x * md - 0.5;
      const double fy = points_[i].y * md - 0.5;
      const double rx = std::round(fx), ry = std::round(fy);
      if (std::abs(fx - rx) > 1e-7 || std::abs(fy - ry) > 1e-7 || rx < 0 || ry < 0 ||
          rx >= md || ry >= md)
        return;
      ix[i] = static_cast<int>(rx);
      iy[i] = static_cast<int>(ry);
      auto& s = seen[static_cast<std::size_t>(iy[i]) * m_ + ix[i]];
      if (s) return;
      s = 1;
    }
    ix_ = std::move(ix);
    iy_ = std::move(iy);
  }

  int m_ = 0;
  std::vector<Point> points_;
  std::vector<int> ix_, iy_;
};

inline LocationGrid make_grid(int m) {
  if (m < 2 || m > LocationGrid::kMaxSide)
    throw InvalidArgument("grid side m must be in [2, 512], got " + std::to_string(m));
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(m) * m);
  for (int row = 0; row < m; ++row)
    for (int col = 0; col < m; ++col)
      pts.push_back({(col + 0.5) / m, (row + 0.5) / m});
  return LocationGrid::from_points(m, std::move(pts));
}

/// Frequency band and amplitude law of a band-limited field.
struct SpectralSpec {
  int k_min = 1;
  int k_max = 1;
  double decay = 0.0;    ///< amplitude ~ max(|k|_inf, 1)^(-decay)
  double variance = 1.0; ///< target empirical variance over the grid; 0 = zero field

  void validate() const {
    if (k_min < 0 || k_max < 0) throw InvalidArgument("spectral band limits must be >= 0");
    if (k_min > k_max) throw InvalidArgument("spectral band requires k_min <= k_max");
    if (!(decay >= 0.0) || !std::isfinite(decay)) throw InvalidArgument("decay must be finite and >= 0");
    if (!(variance >= 0.0) || !std::isfinite(variance))
      throw InvalidArgument("variance must be finite and >= 0");
  }
};

/// Location-independent normal field.
struct IidSpec {
  double sd = 1.0;
};

using FieldSpec = std::variant<SpectralSpec, IidSpec>;

struct FieldSample {
  VectorXd values;
  FieldSpec spec;
  std::uint64_t seed = 0;
};

/// infinity norm of an integer frequency pair
inline int shell_of(int k1, int k2) noexcept { return std::max(std::abs(k1), std::abs(k2)); }

/// Integer frequency pairs in [lo, hi] shells, one representative per +/- pair
/// (k1 > 0, or k1 == 0 and k2 >= 0). Includes (0,0) only when lo == 0.
inline std::vector<std::array<int, 2>> half_plane_frequencies(int lo, int hi) {
  std::vector<std::array<int, 2>> out;
  for (int k1 = 0; k1 <= hi; ++k1)
    for (int k2 = (k1 == 0 ? 0 : -hi); k2 <= hi; ++k2) {
      const int s = shell_of(k1, k2);
      if (s >= lo && s <= hi) out.push_back({k1, k2});
    }
  return out;
}

namespace detail {

/// Evaluates cos and sin of 2*pi*(k1*x + k2*y) at every grid point.
/// On regular grids the phase is an exact integer multiple of pi/m, so values
/// come from a table and are identical for any ordering of the points.
class WaveEvaluator {
public:
  explicit WaveEvaluator(const LocationGrid& grid) : grid_(&grid) {
    if (grid.regular()) {
      const int period = 2 * grid.side();
      cos_.resize(period);
      sin_.resize(period);
      for (int t = 0; t < period; ++t) {
        const double a = std::numbers::pi * t / grid.side();
        cos_[t] = std::cos(a);
        sin_[t] = std::sin(a);
      }
    }
  }

  template <class Fn>
  void for_each(int k1, int k2, Fn&& fn) const {
    const auto& g = *grid_;
    if (g.regular()) {
      const long period = 2L * g.side();
      for (std::size_t i = 0; i < g.size(); ++i) {
        long t = (static_cast<long>(k1) * (2 * g.lattice_x(i) + 1) +
                  static_cast<long>(k2) * (2 * g.lattice_y(i) + 1)) %
                 period;
        if (t < 0) t += period;
        fn(i, cos_[t], sin_[t]);
      }
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = 2.0 * std::numbers::pi * (k1 * g[i].x + k2 * g[i].y);
        fn(i, std::cos(a), std::sin(a));
      }
    }
  }

private:
  const LocationGrid* grid_;
  std::vector<double> cos_, sin_;
};

inline double grid_variance(const VectorXd& v) {
  if (v.size() == 0) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

} // namespace detail

/// Band-limited Fourier synthesis, rescaled so the empirical grid variance
/// equals spec.variance.
inline FieldSample sample_grf(const LocationGrid& grid, const SpectralSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (2 * spec.k_max > grid.side())
    throw AliasingError("k_max = " + std::to_string(spec.k_max) + " exceeds m/2 for m = " +
                        std::to_string(grid.side()));
  FieldSample out{VectorXd::Zero(static_cast<Eigen::Index>(grid.size())), spec, seed};
  if (spec.variance == 0.0) return out;

  Engine eng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const detail::WaveEvaluator waves(grid);
  auto& v = out.values;
  for (const auto& k : half_plane_frequencies(spec.k_min, spec.k_max)) {
    const double scale = std::pow(std::max(shell_of(k[0], k[1]), 1), -spec.decay);
    const double a = normal(eng) * scale;
    const double b = normal(eng) * scale;
    waves.for_each(k[0], k[1], [&](std::size_t i, double c, double s) {
      v[static_cast<Eigen::Index>(i)] += a * c + b * s;
    });
  }
  const double pre = detail::grid_variance(v);
  if (pre > 0.0) v *= std::sqrt(spec.variance / pre);
  return out;
}

inline FieldSample sample_iid(const LocationGrid& grid, double sd, std::uint64_t seed) {
  if (!(sd >= 0.0) || !std::isfinite(sd))
    throw InvalidArgument("iid field sd must be finite and >= 0");
  FieldSample out{VectorXd::Zero(static_cast<Eigen::Index>(grid.size())), IidSpec{sd}, seed};
  if (sd == 0.0) return out;
  Engine eng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, sd);
  for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values[i] = normal(eng);
  return out;
}

inline FieldSample sample_field(const LocationGrid& grid, const FieldSpec& spec, std::uint64_t seed) {
  if (const auto* s = std::get_if<SpectralSpec>(&spec)) return sample_grf(grid, *s, seed);
  return sample_iid(grid, std::get<IidSpec>(spec).sd, seed);
}

/// Energy of the 2-D DFT of a field per infinity-norm frequency shell, scaled
/// so shells sum to the field's sum of squares. Shells 0..floor(m/2) are all
/// present in the result.
inline std::map<int, double> field_dft_energy(std::span<const double> values, const LocationGrid& grid) {
  if (values.size() != grid.size())
    throw InvalidArgument("field length " + std::to_string(values.size()) +
                          " does not match grid size " + std::to_string(grid.size()));
  if (!grid.regular()) throw InvalidArgument("field_dft_energy needs a regular lattice grid");
  const int m = grid.side();
  using cplx = std::complex<double>;
  std::vector<cplx> twiddle(m);
  for (int t = 0; t < m; ++t) twiddle[t] = std::polar(1.0, -2.0 * std::numbers::pi * t / m);

  // f[row][col] with row = y index, col = x index
  std::vector<double> f(static_cast<std::size_t>(m) * m, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    f[static_cast<std::size_t>(grid.lattice_y(i)) * m + grid.lattice_x(i)] = values[i];

  // transform along x for every row, then along y
  std::vector<cplx> rows(f.size());
  for (int r = 0; r < m; ++r)
    for (int u = 0; u < m; ++u) {
      cplx acc = 0.0;
      for (int c = 0; c < m; ++c) acc += f[static_cast<std::size_t>(r) * m + c] * twiddle[(u * c) % m];
      rows[static_cast<std::size_t>(r) * m + u] = acc;
    }
  std::map<int, double> energy;
  for (int s = 0; s <= m / 2; ++s) energy[s] = 0.0;
  const double n = static_cast<double>(grid.size());
  for (int v = 0; v < m; ++v)
    for (int u = 0; u < m; ++u) {
      cplx acc = 0.0;
      for (int r = 0; r < m; ++r) acc += rows[static_cast<std::size_t>(r) * m + u] * twiddle[(v * r) % m];
      const int fu = u <= m / 2 ? u : u - m;
      const int fv = v <= m / 2 ? v : v - m;
      energy[shell_of(fu, fv)] += std::norm(acc) / n;
    }
  return energy;
}

inline std::map<int, double> field_dft_energy(const FieldSample& field, const LocationGrid& grid) {
  return field_dft_energy(std::span<const double>(field.values.data(), static_cast<std::size_t>(field.values.size())), grid);
}

} // namespace spconf

#endif // SPCONF_GRID_FIELDS_HPP
