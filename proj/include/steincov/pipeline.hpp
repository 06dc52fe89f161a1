#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "steincov/assignment.hpp"
#include "steincov/baselines.hpp"
#include "steincov/coverage.hpp"
#include "steincov/metrics.hpp"
#include "steincov/scenario.hpp"
#include "steincov/svgd.hpp"

namespace steincov {

struct MethodMetrics {
  double kl_qp = std::nan("");
  double kl_pq = std::nan("");
  double min_pairwise_distance = std::nan("");  // NaN for a single sensor
  double overlap_fraction = std::nan("");
  double covered_mass = std::nan("");
  double spread_deficit = std::nan("");  // over deployed positions
  double wall_ms = 0.0;
};

struct MethodResult {
  Method method = Method::kStein;
  bool ok = false;
  std::string failure;
  std::vector<Pose> poses;  // in sensor order
  MethodMetrics metrics;

  // Stein only.
  PointList pois;
  std::vector<std::size_t> map_indices;
  std::optional<Matching> matching;
  std::optional<CostMatrices> costs;
  double ksd = std::nan("");

  // Lloyd baselines only.
  std::vector<double> cost_history;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::size_t> empty_cells;
};

struct RunReport {
  Scenario scenario;
  std::vector<MethodResult> methods;
  std::optional<Trace> trace;  // SVGD trace when Stein ran
  double total_wall_ms = 0.0;

  const MethodResult* find(Method m) const {
    for (const auto& r : methods) {
      if (r.method == m) return &r;
    }
    return nullptr;
  }
};

inline MethodMetrics deployment_metrics(const Deployment& dep, const GaussianMixture& gmm, const DensityGrid& grid,
                                        double spread_radius) {
  MethodMetrics m;
  const auto kl = collective_kl(dep, gmm, grid.workspace);
  m.kl_qp = kl.kl_qp;
  m.kl_pq = kl.kl_pq;
  if (dep.poses.size() >= 2) {
    m.min_pairwise_distance = min_pairwise_distance(dep.poses);
    PointList pos;
    for (const auto& p : dep.poses) pos.push_back(p.position);
    m.spread_deficit = spread_deficit(pos, spread_radius);
  }
  m.overlap_fraction = overlap_fraction(dep, grid.workspace);
  m.covered_mass = covered_mass(dep, grid);
  return m;
}

namespace detail {

inline void run_stein(const Scenario& sc, const GaussianMixture& gmm, MethodResult& out, RunReport& report) {
  const ParticleSet initial = uniform_particles(sc.workspace, sc.poi_count, sc.seed);
  SvgdResult svgd = run(initial, gmm, sc.svgd, sc.workspace);
  out.pois = svgd.particles.positions;
  out.map_indices = svgd.map_indices;
  out.iterations = svgd.trace.rows.size();
  out.converged = svgd.trace.converged;
  report.trace = std::move(svgd.trace);
  if (out.pois.size() >= 2) out.ksd = ksd_diagnostic(out.pois, gmm, resolve_kernel(out.pois, sc.svgd));

  out.costs = build_cost_matrix(sc.sensor_models(), out.pois, sc.orientations(), gmm, sc.workspace);
  out.matching = hungarian_solve(out.costs->cost);
  out.poses = finalize_deployment(*out.matching, out.pois, out.costs->orientation);
}

inline void run_lloyd(const Scenario& sc, const GaussianMixture& gmm, bool power, MethodResult& out) {
  std::vector<double> weights(sc.sensors.size(), 0.0);
  if (power) {
    for (std::size_t i = 0; i < sc.sensors.size(); ++i) {
      const double r = sc.sensors[i].model().footprint_bound();
      weights[i] = r * r;
    }
  }
  const PointList init = sample_sites(gmm, sc.workspace, sc.sensors.size(), sc.seed);
  LloydResult lr = lloyd_run(init, weights, gmm, sc.workspace, sc.lloyd_max_iterations, sc.lloyd_tolerance);
  out.cost_history = std::move(lr.cost_history);
  out.iterations = lr.iterations;
  out.converged = lr.converged;
  out.empty_cells = std::move(lr.empty_cells);
  for (const auto& s : lr.sites) out.poses.push_back({s, 0.0});
}

}  // namespace detail

/**
 * Runs every requested method on the scenario, sequentially and in the listed
 * order. A failing method is recorded with its error and the rest still run.
 */
inline RunReport run_pipeline(const Scenario& sc) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  RunReport report;
  report.scenario = sc;
  const GaussianMixture gmm = sc.gmm();
  const DensityGrid grid = grid_evaluate(gmm, sc.workspace);
  const auto sensors = sc.sensor_models();

  for (Method m : sc.methods) {
    MethodResult res;
    res.method = m;
    const auto start = Clock::now();
    try {
      if (m == Method::kStein) {
        detail::run_stein(sc, gmm, res, report);
      } else {
        detail::run_lloyd(sc, gmm, m == Method::kPower, res);
      }
      res.metrics = deployment_metrics({res.poses, sensors, m}, gmm, grid, sc.svgd.spread_radius);
      res.ok = true;
    } catch (const std::exception& e) {
      res.ok = false;
      res.failure = e.what();
      res.poses.clear();
    }
    res.metrics.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    report.methods.push_back(std::move(res));
  }
  report.total_wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return report;
}

}  // namespace steincov
