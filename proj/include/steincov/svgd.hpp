#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "steincov/density.hpp"
#include "steincov/kernels.hpp"
#include "steincov/types.hpp"

namespace steincov {

struct ParticleSet {
  PointList positions;
  std::size_t iteration = 0;

  std::size_t size() const { return positions.size(); }
};

struct SvgdConfig {
  double step_size = 2.0;
  std::size_t max_iterations = 1000;
  double spread_radius = 1.0;
  // Empty means ceil(0.1 n).
  std::optional<std::size_t> map_particle_count;
  bool regulated = true;
  double convergence_tolerance = 1e-4;
  bool adaptive_step = true;
  // Empty means the median heuristic, recomputed every iteration.
  std::optional<double> bandwidth;
  double variance_floor = 1e-6;
  WeightMode weight_mode = WeightMode::kMatrixExponential;

  void validate() const {
    if (!(step_size >= 0.0)) throw std::invalid_argument("svgd: step_size must be >= 0");
    if (!(spread_radius > 0.0)) throw std::invalid_argument("svgd: spread_radius must be > 0");
    if (!(convergence_tolerance > 0.0)) {
      throw std::invalid_argument("svgd: convergence_tolerance must be > 0");
    }
    if (bandwidth && !(*bandwidth > 0.0)) throw std::invalid_argument("svgd: bandwidth must be > 0");
    if (!(variance_floor > 0.0)) throw std::invalid_argument("svgd: variance_floor must be > 0");
  }

  std::size_t resolved_map_count(std::size_t n) const {
    const std::size_t count =
        map_particle_count.value_or(static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n))));
    if (count > n) throw std::invalid_argument("svgd: map_particle_count exceeds particle count");
    return count;
  }
};

struct TraceRow {
  std::size_t iteration = 0;
  double max_displacement = 0.0;
  double spread_deficit = 0.0;  // NaN when fewer than two particles
  double trace_var = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  bool converged = false;
};

/// Per-particle, per-coordinate accumulated squared directions (AdaGrad).
struct AdaptiveState {
  static constexpr double kFudge = 1e-6;
  std::vector<Vec2> accumulated;
};

/// Mean over ordered pairs i != j of |x_i - x_j|^2, minus R^2.
inline double spread_deficit(const PointList& points, double radius) {
  const std::size_t n = points.size();
  if (n < 2) throw std::invalid_argument("spread_deficit: need at least two particles");
  // sum_{i,j} |x_i - x_j|^2 = 2 n sum_i |x_i - mu|^2
  Vec2 mu = Vec2::Zero();
  for (const auto& p : points) mu += p;
  mu /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& p : points) ss += (p - mu).squaredNorm();
  const double nd = static_cast<double>(n);
  return 2.0 * nd * ss / (nd * (nd - 1.0)) - radius * radius;
}

inline double spread_deficit(const ParticleSet& ps, double radius) {
  return spread_deficit(ps.positions, radius);
}

/**
 * phi*(x_i) = (1/n) sum_j [ score(x_j) k(x_j, x_i) + grad_{x_j} k(x_j, x_i) ].
 * `scores` are the precomputed score values at every particle.
 */
inline Vec2 svgd_direction(const PointList& positions, const PointList& scores,
                           const KernelSpec& spec, std::size_t i) {
  const Mat2& a = spec.metric();
  const double h = spec.h();
  const Vec2& xi = positions[i];
  Vec2 phi = Vec2::Zero();
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const Vec2 d = positions[j] - xi;
    const Vec2 ad = a * d;
    const double k = std::exp(-d.dot(ad) / h);
    phi += k * scores[j] - (2.0 / h) * k * ad;
  }
  return phi / static_cast<double>(positions.size());
}

inline PointList score_all(const PointList& positions, const GaussianMixture& gmm) {
  PointList scores(positions.size());
  for (std::size_t j = 0; j < positions.size(); ++j) scores[j] = gmm.score(positions[j]);
  return scores;
}

inline Vec2 svgd_direction(const ParticleSet& ps, const GaussianMixture& gmm, const KernelSpec& spec,
                           std::size_t i) {
  return svgd_direction(ps.positions, score_all(ps.positions, gmm), spec, i);
}

/// Indices of the `count` particles with highest log-density (ties to smaller index).
inline std::vector<std::size_t> designate_map_particles(const ParticleSet& ps,
                                                        const GaussianMixture& gmm,
                                                        std::size_t count) {
  const std::size_t n = ps.size();
  if (count > n) throw std::invalid_argument("designate_map_particles: count exceeds particle count");
  std::vector<double> logp(n);
  for (std::size_t i = 0; i < n; ++i) logp[i] = gmm.log_density(ps.positions[i]);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return logp[a] > logp[b]; });
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/**
 * One transport step. Non-MAP particles move by eps * phi* (optionally with the
 * per-coordinate adaptive scaling); MAP particles follow eps * score only. All
 * directions are computed from the pre-step positions, then clamped to `ws`.
 */
inline ParticleSet svgd_step(const ParticleSet& ps, const GaussianMixture& gmm, const KernelSpec& spec,
                             const SvgdConfig& cfg, const Workspace& ws,
                             const std::vector<std::size_t>& map_indices = {},
                             AdaptiveState* adaptive = nullptr) {
  const std::size_t n = ps.size();
  const PointList scores = score_all(ps.positions, gmm);
  std::vector<char> is_map(n, 0);
  for (auto i : map_indices) is_map.at(i) = 1;

  PointList directions(n);
  for (std::size_t i = 0; i < n; ++i) {
    directions[i] = is_map[i] ? scores[i] : svgd_direction(ps.positions, scores, spec, i);
    if (!directions[i].allFinite()) {
      throw std::runtime_error("svgd_step: non-finite direction for particle " + std::to_string(i));
    }
  }

  AdaptiveState local;
  if (cfg.adaptive_step && adaptive == nullptr) adaptive = &local;
  if (cfg.adaptive_step) {
    if (adaptive->accumulated.size() != n) adaptive->accumulated.assign(n, Vec2::Zero());
    for (std::size_t i = 0; i < n; ++i) {
      if (is_map[i]) continue;
      auto& acc = adaptive->accumulated[i];
      acc += directions[i].cwiseProduct(directions[i]);
      directions[i] = directions[i].cwiseQuotient((acc.cwiseSqrt().array() + AdaptiveState::kFudge).matrix());
    }
  }

  ParticleSet next{PointList(n), ps.iteration + 1};
  for (std::size_t i = 0; i < n; ++i) {
    next.positions[i] = ws.clamp(ps.positions[i] + cfg.step_size * directions[i]);
  }
  return next;
}

/// Uniform draws over the workspace rectangle.
inline ParticleSet uniform_particles(const Workspace& ws, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(ws.x_min, ws.x_max);
  std::uniform_real_distribution<double> uy(ws.y_min, ws.y_max);
  ParticleSet ps;
  ps.positions.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = ux(rng);
    ps.positions.emplace_back(x, uy(rng));
  }
  return ps;
}

/// Kernel used at the current particle configuration.
inline KernelSpec resolve_kernel(const PointList& positions, const SvgdConfig& cfg) {
  const double h = cfg.bandwidth ? *cfg.bandwidth
                   : positions.size() >= 2 ? median_heuristic(positions)
                                           : 1.0;
  if (!cfg.regulated) return KernelSpec::rbf(h);
  return kernel_from_variance(empirical_variance(positions, cfg.variance_floor), h, cfg.weight_mode);
}

struct SvgdResult {
  ParticleSet particles;
  Trace trace;
  std::vector<std::size_t> map_indices;
};

/**
 * Full SVGD loop. Regulated runs refresh the variance state and weight matrix
 * every iteration and use the Mahalanobis-Gaussian kernel; vanilla runs use
 * RBF. Stops after max_iterations or when the largest particle displacement
 * drops below the convergence tolerance.
 */
inline SvgdResult run(const ParticleSet& initial, const GaussianMixture& gmm, const SvgdConfig& cfg,
                      const Workspace& ws) {
  cfg.validate();
  if (initial.size() == 0) throw std::invalid_argument("svgd run: empty particle set");
  SvgdResult result{initial, {}, {}};
  for (auto& p : result.particles.positions) p = ws.clamp(p);
  result.map_indices = designate_map_particles(result.particles, gmm, cfg.resolved_map_count(initial.size()));

  AdaptiveState adaptive;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const KernelSpec spec = resolve_kernel(result.particles.positions, cfg);
    ParticleSet next = svgd_step(result.particles, gmm, spec, cfg, ws, result.map_indices, &adaptive);

    double max_disp = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      max_disp = std::max(max_disp, (next.positions[i] - result.particles.positions[i]).norm());
    }
    result.particles = std::move(next);
    const auto& pos = result.particles.positions;
    result.trace.rows.push_back(
        {result.particles.iteration, max_disp,
         pos.size() >= 2 ? spread_deficit(pos, cfg.spread_radius) : std::nan(""),
         empirical_variance(pos).variance.trace()});
    if (max_disp < cfg.convergence_tolerance) {
      result.trace.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace steincov
