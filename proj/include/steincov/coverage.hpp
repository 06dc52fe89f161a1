#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "steincov/density.hpp"
#include "steincov/types.hpp"

namespace steincov {

enum class FootprintShape { kDisc, kEllipse };

/**
 * A sensor's quality-of-service distribution s_i(x | x_i, theta_i): a Gaussian
 * with body-frame covariance `covariance`, rotated rigidly with the sensor.
 *
 * The effective footprint is either a disc of radius `disc_radius` or the
 * covariance ellipse at `ellipse_level` standard deviations.
 */
struct SensorModel {
  int id = 0;
  Mat2 covariance = Mat2::Identity();
  FootprintShape shape = FootprintShape::kDisc;
  double disc_radius = 2.0;
  double ellipse_level = 2.0;

  static SensorModel isotropic(int id, double sigma, double footprint_scale = 2.0) {
    return {id, sigma * sigma * Mat2::Identity(), FootprintShape::kDisc, footprint_scale * sigma, 2.0};
  }

  static SensorModel anisotropic(int id, const Mat2& cov, double footprint_scale = 2.0) {
    return {id, cov, FootprintShape::kEllipse, 0.0, footprint_scale};
  }

  void validate() const {
    if (!is_spd(covariance)) {
      throw std::invalid_argument("sensor " + std::to_string(id) +
                                  ": covariance must be symmetric positive definite");
    }
    if (shape == FootprintShape::kDisc && !(disc_radius > 0.0)) {
      throw std::invalid_argument("sensor " + std::to_string(id) + ": footprint radius must be > 0");
    }
    if (shape == FootprintShape::kEllipse && !(ellipse_level > 0.0)) {
      throw std::invalid_argument("sensor " + std::to_string(id) + ": footprint scale must be > 0");
    }
  }

  double largest_eigenvalue() const {
    return Eigen::SelfAdjointEigenSolver<Mat2>(covariance, Eigen::EigenvaluesOnly).eigenvalues()(1);
  }

  /// Radius of the smallest disc centered at the sensor enclosing the footprint.
  double footprint_bound() const {
    return shape == FootprintShape::kDisc ? disc_radius : ellipse_level * std::sqrt(largest_eigenvalue());
  }

  double footprint_area() const {
    if (shape == FootprintShape::kDisc) return kPi * disc_radius * disc_radius;
    return kPi * ellipse_level * ellipse_level * std::sqrt(covariance.determinant());
  }

  bool is_isotropic() const {
    return covariance(0, 1) == 0.0 && covariance(1, 0) == 0.0 && covariance(0, 0) == covariance(1, 1);
  }

  /// Body-frame angle of the major axis, in [0, pi).
  double major_axis_angle() const {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(covariance);
    const Vec2 v = eig.eigenvectors().col(1);
    double a = std::atan2(v.y(), v.x());
    if (a < 0.0) a += kPi;
    if (a >= kPi) a -= kPi;
    return a;
  }
};

struct Pose {
  Vec2 position = Vec2::Zero();
  double theta = 0.0;
};

/// Orientation candidates, strictly increasing in [0, 2 pi).
struct OrientationGrid {
  std::vector<double> angles;

  static OrientationGrid uniform(std::size_t m) {
    if (m == 0) throw std::invalid_argument("orientation grid: need at least one angle");
    OrientationGrid g;
    for (std::size_t k = 0; k < m; ++k) g.angles.push_back(kTwoPi * static_cast<double>(k) / static_cast<double>(m));
    return g;
  }

  void validate() const {
    if (angles.empty()) throw std::invalid_argument("orientation grid: need at least one angle");
    for (std::size_t k = 0; k < angles.size(); ++k) {
      if (!(angles[k] >= 0.0 && angles[k] < kTwoPi)) {
        throw std::invalid_argument("orientation grid: angles must lie in [0, 2 pi)");
      }
      if (k > 0 && !(angles[k] > angles[k - 1])) {
        throw std::invalid_argument("orientation grid: angles must be strictly increasing");
      }
    }
  }

  std::size_t size() const { return angles.size(); }
};

/// R(theta) Sigma R(theta)^T.
inline Mat2 world_covariance(const SensorModel& s, double theta) {
  const Mat2 r = rotation(theta);
  Mat2 c = r * s.covariance * r.transpose();
  c(0, 1) = c(1, 0) = 0.5 * (c(0, 1) + c(1, 0));
  return c;
}

inline double sensor_log_density(const SensorModel& s, const Pose& pose, const Vec2& x) {
  return gaussian_log_density(pose.position, world_covariance(s, pose.theta), x);
}

inline double sensor_density(const SensorModel& s, const Pose& pose, const Vec2& x) {
  return std::exp(sensor_log_density(s, pose, x));
}

/// Membership test for the rotated footprint, boundary inclusive.
class FootprintTest {
 public:
  FootprintTest(const SensorModel& s, const Pose& pose)
      : center_(pose.position),
        disc_(s.shape == FootprintShape::kDisc),
        radius2_(s.disc_radius * s.disc_radius),
        level2_(s.ellipse_level * s.ellipse_level),
        precision_(world_covariance(s, pose.theta).inverse()) {}

  bool operator()(const Vec2& x) const { return contains_offset(x - center_); }

  /// Membership of an offset from the center; the boundary is inclusive up to rounding.
  bool contains_offset(const Vec2& d) const {
    if (disc_) return d.squaredNorm() <= radius2_ * (1.0 + 1e-12);
    return d.dot(precision_ * d) <= level2_ * (1.0 + 1e-12);
  }

 private:
  Vec2 center_;
  bool disc_;
  double radius2_;
  double level2_;
  Mat2 precision_;
};

inline bool in_footprint(const SensorModel& s, const Pose& pose, const Vec2& x) {
  return FootprintTest(s, pose)(x);
}

/// Lattice pitch 1/k with the smallest k giving >= 240 lattice points per unclipped footprint area.
inline double footprint_pitch(const SensorModel& s) {
  const double area = s.footprint_area();
  double k = std::max(1.0, std::floor(std::sqrt(240.0 / area)));
  while (area * k * k < 240.0) k += 1.0;
  return 1.0 / k;
}

/**
 * Centers of the sub-grid cells inside the rotated footprint and inside the
 * workspace. The lattice is anchored at the sensor position.
 */
inline PointList footprint_points(const SensorModel& s, const Pose& pose, const Workspace& ws) {
  const double pitch = footprint_pitch(s);
  const double bound = s.footprint_bound();
  const int span = static_cast<int>(std::ceil(bound / pitch)) + 1;
  const FootprintTest inside(s, pose);
  PointList pts;
  for (int iy = -span; iy <= span; ++iy) {
    for (int ix = -span; ix <= span; ++ix) {
      const Vec2 d(ix * pitch, iy * pitch);
      const Vec2 x = pose.position + d;
      if (inside.contains_offset(d) && ws.contains(x)) pts.push_back(x);
    }
  }
  return pts;
}

/**
 * Discrete KL(s~ || p~) over the footprint points, both distributions
 * renormalized over the point set, p~ floored at 1e-12. Returns +inf when the
 * footprint does not intersect the workspace.
 */
inline double kl_footprint_cost(const SensorModel& s, const Pose& pose, const GaussianMixture& gmm,
                                const Workspace& ws) {
  const PointList pts = footprint_points(s, pose, ws);
  if (pts.empty()) return std::numeric_limits<double>::infinity();
  const Mat2 cov = world_covariance(s, pose.theta);
  const Mat2 prec = cov.inverse();
  std::vector<double> log_s(pts.size());
  std::vector<double> log_p(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 d = pts[i] - pose.position;
    log_s[i] = -0.5 * d.dot(prec * d);
    log_p[i] = gmm.log_density(pts[i]);
  }
  const double zs = GaussianMixture::log_sum_exp(log_s);
  const double zp = GaussianMixture::log_sum_exp(log_p);
  const double log_floor = std::log(1e-12);
  double kl = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double ls = log_s[i] - zs;
    const double lp = std::max(log_p[i] - zp, log_floor);
    kl += std::exp(ls) * (ls - lp);
  }
  return kl;
}

struct OrientedCost {
  double theta = 0.0;
  double cost = std::numeric_limits<double>::infinity();
  std::size_t index = 0;
  bool feasible() const { return std::isfinite(cost); }
};

/// Minimum footprint KL over the orientation grid; ties (within 1e-12 relative) go to the smaller index.
inline OrientedCost best_orientation(const SensorModel& s, const Vec2& poi, const OrientationGrid& grid,
                                     const GaussianMixture& gmm, const Workspace& ws) {
  grid.validate();
  OrientedCost best{grid.angles.front(), std::numeric_limits<double>::infinity(), 0};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double c = kl_footprint_cost(s, {poi, grid.angles[k]}, gmm, ws);
    const double tol = 1e-12 * std::max(1.0, std::abs(best.cost));
    if (std::isfinite(c) && (!best.feasible() || c < best.cost - tol)) best = {grid.angles[k], c, k};
  }
  return best;
}

/// Dense row-major N x n matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows = init.size();
    cols = rows ? init.begin()->size() : 0;
    for (const auto& row : init) {
      if (row.size() != cols) throw std::invalid_argument("matrix: ragged initializer");
      data.insert(data.end(), row.begin(), row.end());
    }
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  bool operator==(const Matrix&) const = default;
};

struct CostMatrices {
  Matrix cost;         // C*_ij, +inf when infeasible
  Matrix orientation;  // theta*_ij
};

inline CostMatrices build_cost_matrix(const std::vector<SensorModel>& sensors, const PointList& pois,
                                      const OrientationGrid& grid, const GaussianMixture& gmm,
                                      const Workspace& ws) {
  if (sensors.empty()) throw std::invalid_argument("build_cost_matrix: need at least one sensor");
  if (pois.size() < sensors.size()) {
    throw std::invalid_argument("build_cost_matrix: need at least as many PoIs as sensors");
  }
  CostMatrices out{Matrix(sensors.size(), pois.size()), Matrix(sensors.size(), pois.size())};
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    for (std::size_t j = 0; j < pois.size(); ++j) {
      const OrientedCost oc = best_orientation(sensors[i], pois[j], grid, gmm, ws);
      out.cost(i, j) = oc.cost;
      out.orientation(i, j) = oc.theta;
    }
  }
  return out;
}

}  // namespace steincov
