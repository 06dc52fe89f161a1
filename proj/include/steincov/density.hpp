#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "steincov/types.hpp"

namespace steincov {

struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean = Vec2::Zero();
  Mat2 covariance = Mat2::Identity();
};

/// Log-density of N(mean, cov) at x. `cov` must be SPD.
inline double gaussian_log_density(const Vec2& mean, const Mat2& cov, const Vec2& x) {
  const Vec2 d = x - mean;
  return -std::log(kTwoPi) - 0.5 * std::log(cov.determinant()) - 0.5 * d.dot(cov.inverse() * d);
}

/**
 * Event density over the plane as a finite Gaussian mixture.
 *
 * Construction validates the parameters (weights in (0,1] summing to one,
 * SPD covariances with determinant above 1e-12) and caches the per-component
 * inverse covariance, Cholesky factor and log-normalizer so that evaluation is
 * allocation-free.
 */
class GaussianMixture {
 public:
  GaussianMixture() = default;

  explicit GaussianMixture(std::vector<GaussianComponent> components)
      : components_(std::move(components)) {
    if (components_.empty()) {
      throw std::invalid_argument("gmm: at least one component required");
    }
    double total = 0.0;
    cache_.reserve(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const auto& c = components_[k];
      if (!(c.weight > 0.0 && c.weight <= 1.0)) {
        throw std::invalid_argument(describe(k, "weight must lie in (0, 1]"));
      }
      if (!c.mean.allFinite()) {
        throw std::invalid_argument(describe(k, "mean must be finite"));
      }
      if (!is_spd(c.covariance) || c.covariance.determinant() < 1e-12) {
        throw std::invalid_argument(describe(k, "covariance must be symmetric positive definite"));
      }
      Eigen::LLT<Mat2> llt(c.covariance);
      if (llt.info() != Eigen::Success) {
        throw std::invalid_argument(describe(k, "covariance Cholesky factorization failed"));
      }
      total += c.weight;
      cache_.push_back({c.covariance.inverse(), llt.matrixL(),
                        std::log(c.weight) - std::log(kTwoPi) -
                            0.5 * std::log(c.covariance.determinant())});
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("gmm: weights must sum to 1 (got " + std::to_string(total) + ")");
    }
  }

  std::size_t size() const { return components_.size(); }
  const std::vector<GaussianComponent>& components() const { return components_; }
  const GaussianComponent& operator[](std::size_t k) const { return components_[k]; }

  /// Weighted component log-densities log(pi_k N(x | mu_k, Sigma_k)) written into `out`.
  void component_log_terms(const Vec2& x, std::vector<double>& out) const {
    out.resize(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const Vec2 d = x - components_[k].mean;
      out[k] = cache_[k].log_norm - 0.5 * d.dot(cache_[k].precision * d);
    }
  }

  double log_density(const Vec2& x) const {
    thread_local std::vector<double> terms;
    component_log_terms(x, terms);
    return log_sum_exp(terms);
  }

  double density(const Vec2& x) const { return std::exp(log_density(x)); }

  /// Gradient of log p, as a responsibility-weighted sum of component scores.
  Vec2 score(const Vec2& x) const {
    thread_local std::vector<double> terms;
    component_log_terms(x, terms);
    const double lse = log_sum_exp(terms);
    Vec2 g = Vec2::Zero();
    for (std::size_t k = 0; k < components_.size(); ++k) {
      const double r = std::exp(terms[k] - lse);
      if (r == 0.0) continue;
      g += r * (cache_[k].precision * (components_[k].mean - x));
    }
    return g;
  }

  /// i.i.d. draws: categorical component choice, then L z + mu.
  PointList sample(std::size_t count, std::uint64_t seed) const {
    if (count == 0) {
      throw std::invalid_argument("gmm sample: count must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<double> weights;
    for (const auto& c : components_) weights.push_back(c.weight);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    PointList out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t k = pick(rng);
      const double z0 = normal(rng);
      const double z1 = normal(rng);
      out.push_back(components_[k].mean + cache_[k].chol * Vec2(z0, z1));
    }
    return out;
  }

  static double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double t : v) m = std::max(m, t);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double t : v) s += std::exp(t - m);
    return m + std::log(s);
  }

 private:
  struct Cached {
    Mat2 precision;
    Mat2 chol;
    double log_norm;
  };

  static std::string describe(std::size_t k, const char* what) {
    std::ostringstream os;
    os << "gmm component " << k << ": " << what;
    return os.str();
  }

  std::vector<GaussianComponent> components_;
  std::vector<Cached> cache_;
};

inline double log_density(const GaussianMixture& gmm, const Vec2& x) { return gmm.log_density(x); }
inline Vec2 score(const GaussianMixture& gmm, const Vec2& x) { return gmm.score(x); }
inline PointList sample(const GaussianMixture& gmm, std::size_t count, std::uint64_t seed) {
  return gmm.sample(count, seed);
}

/// p on the cell centers of a workspace lattice, plus the renormalized cell masses.
struct DensityGrid {
  Workspace workspace;
  std::vector<double> values;  // p(cell center)
  std::vector<double> mass;    // values * cell area, rescaled to sum to 1

  std::size_t size() const { return values.size(); }
  Vec2 center(std::size_t i) const { return workspace.cell_center(i); }
};

inline DensityGrid grid_evaluate(const GaussianMixture& gmm, const Workspace& ws) {
  ws.validate();
  DensityGrid grid{ws, {}, {}};
  const std::size_t n = ws.cell_count();
  grid.values.resize(n);
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    logs[i] = gmm.log_density(ws.cell_center(i));
    grid.values[i] = std::exp(logs[i]);
  }
  // Normalize in the log domain so a lattice far from every component still
  // yields a proper mass vector.
  const double lse = GaussianMixture::log_sum_exp(logs);
  grid.mass.resize(n);
  for (std::size_t i = 0; i < n; ++i) grid.mass[i] = std::exp(logs[i] - lse);
  return grid;
}

}  // namespace steincov
