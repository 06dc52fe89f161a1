#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "steincov/coverage.hpp"
#include "steincov/density.hpp"
#include "steincov/kernels.hpp"
#include "steincov/types.hpp"

namespace steincov {

enum class Method { kStein, kVoronoi, kPower };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kStein: return "stein";
    case Method::kVoronoi: return "voronoi";
    case Method::kPower: return "power";
  }
  return "unknown";
}

struct Deployment {
  std::vector<Pose> poses;
  std::vector<SensorModel> sensors;
  Method method = Method::kStein;

  void validate() const {
    if (poses.size() != sensors.size()) throw std::invalid_argument("deployment: one pose per sensor");
  }
};

struct KlPair {
  double kl_qp = 0.0;
  double kl_pq = 0.0;
};

/**
 * KL divergences between the team mixture q = (1/N) sum_i s_i and p, both
 * evaluated on the workspace lattice and renormalized over it.
 */
inline KlPair collective_kl(const Deployment& dep, const GaussianMixture& gmm, const Workspace& ws) {
  dep.validate();
  if (dep.poses.empty()) throw std::invalid_argument("collective_kl: empty deployment");
  const std::size_t cells = ws.cell_count();
  std::vector<double> q(cells), p(cells);
  double zq = 0.0;
  double zp = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const Vec2 x = ws.cell_center(c);
    double qc = 0.0;
    for (std::size_t i = 0; i < dep.poses.size(); ++i) qc += sensor_density(dep.sensors[i], dep.poses[i], x);
    q[c] = qc / static_cast<double>(dep.poses.size());
    p[c] = gmm.density(x);
    zq += q[c];
    zp += p[c];
  }
  constexpr double kFloor = 1e-12;
  KlPair out;
  for (std::size_t c = 0; c < cells; ++c) {
    const double qc = q[c] / zq;
    const double pc = p[c] / zp;
    if (qc > 0.0) out.kl_qp += qc * std::log(std::max(qc, kFloor) / std::max(pc, kFloor));
    if (pc > 0.0) out.kl_pq += pc * std::log(std::max(pc, kFloor) / std::max(qc, kFloor));
  }
  return out;
}

inline double min_pairwise_distance(const std::vector<Pose>& poses) {
  if (poses.size() < 2) throw std::invalid_argument("min_pairwise_distance: need at least two poses");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      best = std::min(best, (poses[i].position - poses[j].position).norm());
    }
  }
  return best;
}

/// Per-cell number of footprints containing the cell center.
inline std::vector<int> footprint_cover_counts(const Deployment& dep, const Workspace& ws) {
  dep.validate();
  std::vector<int> counts(ws.cell_count(), 0);
  for (std::size_t i = 0; i < dep.poses.size(); ++i) {
    const FootprintTest inside(dep.sensors[i], dep.poses[i]);
    const double bound = dep.sensors[i].footprint_bound();
    const Vec2& c0 = dep.poses[i].position;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const Vec2 x = ws.cell_center(c);
      if (std::abs(x.x() - c0.x()) > bound || std::abs(x.y() - c0.y()) > bound) continue;
      if (inside(x)) ++counts[c];
    }
  }
  return counts;
}

/// (sum of footprint areas - union area) / sum of footprint areas, by cell counting.
inline double overlap_fraction(const Deployment& dep, const Workspace& ws) {
  const auto counts = footprint_cover_counts(dep, ws);
  double total = 0.0;
  double uni = 0.0;
  for (int k : counts) {
    total += k;
    uni += k > 0 ? 1.0 : 0.0;
  }
  return total > 0.0 ? (total - uni) / total : 0.0;
}

/// Renormalized p-mass of the cells inside the union of footprints.
inline double covered_mass(const Deployment& dep, const DensityGrid& grid) {
  const auto counts = footprint_cover_counts(dep, grid.workspace);
  double m = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) m += grid.mass[c];
  }
  return m;
}

inline double covered_mass(const Deployment& dep, const GaussianMixture& gmm, const Workspace& ws) {
  return covered_mass(dep, grid_evaluate(gmm, ws));
}

/**
 * Kernelized Stein discrepancy, V-statistic form:
 *   sqrt( (1/n^2) sum_{i,j} u_p(x_i, x_j) ),
 *   u_p(x, y) = s(x)^T s(y) k + s(x)^T grad_y k + grad_x k^T s(y) + tr(grad_x grad_y k),
 * with s the score of p. Diagnostic only.
 */
inline double ksd_diagnostic(const PointList& points, const GaussianMixture& gmm, const KernelSpec& spec) {
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("ksd_diagnostic: need at least two points");
  const Mat2 a = spec.metric();
  const double h = spec.h();
  PointList s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = gmm.score(points[i]);
  const double tr_a = a.trace();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2 d = points[i] - points[j];
      const Vec2 ad = a * d;
      const double k = std::exp(-d.dot(ad) / h);
      const Vec2 grad_x = (-2.0 / h) * k * ad;
      const Vec2 grad_y = -grad_x;
      const double trace_term = (2.0 / h) * tr_a * k - (4.0 / (h * h)) * ad.squaredNorm() * k;
      total += s[i].dot(s[j]) * k + s[i].dot(grad_y) + grad_x.dot(s[j]) + trace_term;
    }
  }
  return std::sqrt(std::max(0.0, total / static_cast<double>(n * n)));
}

}  // namespace steincov
