#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "steincov/density.hpp"
#include "steincov/types.hpp"

namespace steincov {

/// Lattice labeling by power distance |x - s_j|^2 - w_j (plain Voronoi when all w_j = 0).
struct Partition {
  Workspace workspace;
  std::vector<std::size_t> labels;
  PointList sites;
  std::vector<double> weights;
};

inline double power_distance(const Vec2& x, const Vec2& site, double weight) {
  return (x - site).squaredNorm() - weight;
}

inline Partition partition_grid(const PointList& sites, const std::vector<double>& weights, const Workspace& ws) {
  if (sites.empty()) throw std::invalid_argument("partition_grid: need at least one site");
  if (weights.size() != sites.size()) throw std::invalid_argument("partition_grid: one weight per site");
  Partition part{ws, std::vector<std::size_t>(ws.cell_count()), sites, weights};
  for (std::size_t c = 0; c < ws.cell_count(); ++c) {
    const Vec2 x = ws.cell_center(c);
    std::size_t best = 0;
    double best_d = power_distance(x, sites[0], weights[0]);
    for (std::size_t j = 1; j < sites.size(); ++j) {
      const double d = power_distance(x, sites[j], weights[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    part.labels[c] = best;
  }
  return part;
}

/// Mass-weighted centroid of the cells labeled `site`; empty when the cell set has no mass.
inline std::optional<Vec2> weighted_centroid(const Partition& part, std::size_t site, const DensityGrid& grid) {
  Vec2 acc = Vec2::Zero();
  double mass = 0.0;
  for (std::size_t c = 0; c < part.labels.size(); ++c) {
    if (part.labels[c] != site) continue;
    acc += grid.mass[c] * grid.center(c);
    mass += grid.mass[c];
  }
  if (!(mass > 0.0)) return std::nullopt;
  return acc / mass;
}

/// Discrete sum over cells of (|x - s_label|^2 - w_label) * mass.
inline double partition_cost(const Partition& part, const DensityGrid& grid) {
  double total = 0.0;
  for (std::size_t c = 0; c < part.labels.size(); ++c) {
    const std::size_t j = part.labels[c];
    total += power_distance(grid.center(c), part.sites[j], part.weights[j]) * grid.mass[c];
  }
  return total;
}

inline double locational_cost(const PointList& sites, const std::vector<double>& weights,
                              const GaussianMixture& gmm, const Workspace& ws) {
  return partition_cost(partition_grid(sites, weights, ws), grid_evaluate(gmm, ws));
}

struct LloydResult {
  PointList sites;
  std::vector<double> cost_history;  // cost of every iterate, initial one included
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::size_t> empty_cells;  // sites whose final cell held no mass
};

/**
 * Discrete Lloyd iteration: label the lattice by power distance, move every
 * site to the mass centroid of its cell, repeat until the largest move is
 * below `tolerance` or `max_iters` is reached. Sites with empty cells stay put
 * and are reported.
 */
inline LloydResult lloyd_run(const PointList& initial, const std::vector<double>& weights,
                             const GaussianMixture& gmm, const Workspace& ws, std::size_t max_iters,
                             double tolerance = 1e-4) {
  const DensityGrid grid = grid_evaluate(gmm, ws);
  LloydResult res;
  res.sites = initial;
  Partition part = partition_grid(res.sites, weights, ws);
  res.cost_history.push_back(partition_cost(part, grid));
  for (std::size_t it = 0; it < max_iters; ++it) {
    double max_move = 0.0;
    res.empty_cells.clear();
    for (std::size_t j = 0; j < res.sites.size(); ++j) {
      const auto centroid = weighted_centroid(part, j, grid);
      if (!centroid) {
        res.empty_cells.push_back(j);
        continue;
      }
      max_move = std::max(max_move, (*centroid - res.sites[j]).norm());
      res.sites[j] = *centroid;
    }
    ++res.iterations;
    part = partition_grid(res.sites, weights, ws);
    res.cost_history.push_back(partition_cost(part, grid));
    if (max_move < tolerance) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// Seeded initial sites drawn from the event density, clamped to the workspace.
inline PointList sample_sites(const GaussianMixture& gmm, const Workspace& ws, std::size_t count, std::uint64_t seed) {
  PointList pts = gmm.sample(count, seed);
  for (auto& p : pts) p = ws.clamp(p);
  return pts;
}

}  // namespace steincov
