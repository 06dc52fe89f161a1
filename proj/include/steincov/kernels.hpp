#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "steincov/types.hpp"

namespace steincov {

enum class KernelFamily { kRbf, kMahalanobisGaussian };

/// How the particle variance is mapped to the kernel weight matrix.
enum class WeightMode {
  kMatrixExponential,  // W = expm(-(Var + eps I) / h)
  kScalar,             // W = exp(-trace(Var + eps I) / h) I
};

/**
 * k(x, y) = exp(-(1/h) (x - y)^T W^{-1} (x - y)).
 *
 * The RBF family is the W = I special case. `bandwidth` must be resolved to a
 * number before evaluation; an empty optional means "median heuristic" and is
 * only meaningful to the SVGD driver.
 */
struct KernelSpec {
  KernelFamily family = KernelFamily::kRbf;
  std::optional<double> bandwidth;
  Mat2 weight = Mat2::Identity();
  Mat2 inverse_weight = Mat2::Identity();

  static KernelSpec rbf(double h) {
    return {KernelFamily::kRbf, h, Mat2::Identity(), Mat2::Identity()};
  }

  /// W^{-1} is formed spectrally so that tiny eigenvalues of W survive inversion.
  static KernelSpec mahalanobis(double h, const Mat2& w) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(w);
    const Vec2 inv = eig.eigenvalues().cwiseInverse();
    return {KernelFamily::kMahalanobisGaussian, h, w,
            eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose()};
  }

  double h() const {
    if (!bandwidth || !(*bandwidth > 0.0)) {
      throw std::invalid_argument("kernel: bandwidth must be resolved to a positive value");
    }
    return *bandwidth;
  }

  /// W^{-1}; the identity for RBF.
  const Mat2& metric() const { return inverse_weight; }

  void validate() const {
    h();
    if (family == KernelFamily::kMahalanobisGaussian && !is_spd(weight)) {
      throw std::invalid_argument("kernel: weight matrix must be symmetric positive definite");
    }
  }
};

inline double kernel_eval(const KernelSpec& spec, const Vec2& x, const Vec2& y) {
  const Vec2 d = x - y;
  return std::exp(-d.dot(spec.metric() * d) / spec.h());
}

/// Gradient in the first argument: -(2/h) W^{-1} (x - y) k(x, y).
inline Vec2 kernel_grad_x(const KernelSpec& spec, const Vec2& x, const Vec2& y) {
  const Mat2& a = spec.metric();
  const Vec2 d = x - y;
  const double h = spec.h();
  const Vec2 ad = a * d;
  return (-2.0 / h) * std::exp(-d.dot(ad) / h) * ad;
}

/// h = med^2 / log(n + 1) with med the median pairwise distance.
inline double median_heuristic(const PointList& points) {
  const std::size_t n = points.size();
  if (n < 2) {
    throw std::invalid_argument("median_heuristic: degenerate particle set (need >= 2 points)");
  }
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dists.push_back((points[i] - points[j]).norm());
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double med = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  return std::max(med * med / std::log(static_cast<double>(n) + 1.0), 1e-8);
}

struct VarianceState {
  Vec2 mean = Vec2::Zero();
  Mat2 variance = Mat2::Zero();
  double floor = 1e-6;

  Mat2 regularized() const { return variance + floor * Mat2::Identity(); }
};

/// Population mean and covariance, (1/n) sum (x - mu)(x - mu)^T.
inline VarianceState empirical_variance(const PointList& points, double floor = 1e-6) {
  if (points.empty()) {
    throw std::invalid_argument("empirical_variance: empty point set");
  }
  const double n = static_cast<double>(points.size());
  Vec2 mu = Vec2::Zero();
  for (const auto& p : points) mu += p;
  mu /= n;
  Mat2 var = Mat2::Zero();
  for (const auto& p : points) {
    const Vec2 d = p - mu;
    var += d * d.transpose();
  }
  var /= n;
  var(0, 1) = var(1, 0) = 0.5 * (var(0, 1) + var(1, 0));
  return {mu, var, floor};
}

// Largest exponent passed to exp(-lambda / h); keeps W strictly positive definite.
inline constexpr double kMaxWeightExponent = 700.0;

/// W from the particle variance, either expm(-(Var + eps I)/h) or its scalar analogue.
inline Mat2 update_weight_matrix(const VarianceState& vs, double h,
                                 WeightMode mode = WeightMode::kMatrixExponential) {
  if (!(h > 0.0)) throw std::invalid_argument("update_weight_matrix: h must be positive");
  const Mat2 reg = vs.regularized();
  if (mode == WeightMode::kScalar) {
    return std::exp(-std::min(reg.trace() / h, kMaxWeightExponent)) * Mat2::Identity();
  }
  Eigen::SelfAdjointEigenSolver<Mat2> eig(reg);
  const Vec2 lambda = eig.eigenvalues().unaryExpr(
      [h](double l) { return std::exp(-std::min(l / h, kMaxWeightExponent)); });
  Mat2 w = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  w(0, 1) = w(1, 0) = 0.5 * (w(0, 1) + w(1, 0));
  return w;
}

/**
 * Mahalanobis-Gaussian kernel for the current particle variance. W^{-1} is
 * built from the same eigendecomposition as W (eigenvalues exp(+lambda/h)),
 * avoiding a round trip through a nearly singular W.
 */
inline KernelSpec kernel_from_variance(const VarianceState& vs, double h,
                                       WeightMode mode = WeightMode::kMatrixExponential) {
  const Mat2 w = update_weight_matrix(vs, h, mode);
  const Mat2 reg = vs.regularized();
  Mat2 inv;
  if (mode == WeightMode::kScalar) {
    inv = std::exp(std::min(reg.trace() / h, kMaxWeightExponent)) * Mat2::Identity();
  } else {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(reg);
    const Vec2 lambda = eig.eigenvalues().unaryExpr(
        [h](double l) { return std::exp(std::min(l / h, kMaxWeightExponent)); });
    inv = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    inv(0, 1) = inv(1, 0) = 0.5 * (inv(0, 1) + inv(1, 0));
  }
  return {KernelFamily::kMahalanobisGaussian, h, w, inv};
}

}  // namespace steincov
