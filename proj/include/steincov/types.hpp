#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace steincov {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using PointList = std::vector<Vec2>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Raised when a placement or matching has no finite-cost solution.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rectangular workspace with a square evaluation lattice.
struct Workspace {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  int grid_resolution = 100;  // cells per axis

  void validate() const {
    if (!(x_max > x_min) || !(y_max > y_min)) {
      throw std::invalid_argument("workspace: bounds must satisfy max > min");
    }
    if (grid_resolution < 2) {
      throw std::invalid_argument("workspace: grid_resolution must be >= 2");
    }
  }

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double cell_width() const { return width() / grid_resolution; }
  double cell_height() const { return height() / grid_resolution; }
  double cell_area() const { return cell_width() * cell_height(); }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(grid_resolution) * static_cast<std::size_t>(grid_resolution);
  }

  /// Center of cell `index`, row-major with x varying fastest.
  Vec2 cell_center(std::size_t index) const {
    const auto res = static_cast<std::size_t>(grid_resolution);
    const auto ix = index % res;
    const auto iy = index / res;
    return {x_min + (static_cast<double>(ix) + 0.5) * cell_width(),
            y_min + (static_cast<double>(iy) + 0.5) * cell_height()};
  }

  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }

  Vec2 clamp(const Vec2& p) const {
    return {std::clamp(p.x(), x_min, x_max), std::clamp(p.y(), y_min, y_max)};
  }

  /// Same rectangle at a different lattice resolution.
  Workspace with_resolution(int resolution) const {
    Workspace ws = *this;
    ws.grid_resolution = resolution;
    return ws;
  }
};

inline Mat2 rotation(double theta) {
  Mat2 r;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  r << c, -s, s, c;
  return r;
}

/// Symmetric positive definite check via the closed-form 2x2 eigenvalues.
inline bool is_spd(const Mat2& m, double min_eigenvalue = 0.0) {
  if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  const double tr = m.trace();
  const double det = m.determinant();
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  return 0.5 * tr - disc > min_eigenvalue;
}

}  // namespace steincov
