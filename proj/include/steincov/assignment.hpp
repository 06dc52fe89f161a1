#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "steincov/coverage.hpp"
#include "steincov/types.hpp"

namespace steincov {

struct Matching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (sensor, poi), sorted by sensor
  std::vector<double> orientations;                        // theta* per pair, filled by callers
  double total_cost = 0.0;
};

namespace detail {

/// Sum of the selected entries in sensor order, so equal pair sets give bit-equal totals.
inline double matching_cost(const Matrix& cost, const std::vector<std::size_t>& col_of_row) {
  double total = 0.0;
  for (std::size_t i = 0; i < col_of_row.size(); ++i) total += cost(i, col_of_row[i]);
  return total;
}

/**
 * Shortest-augmenting-path Hungarian method with row/column potentials for a
 * rows <= cols matrix of finite entries. Rows are `active_rows`, columns are
 * `active_cols`; returns the column chosen for every active row.
 */
inline std::vector<std::size_t> hungarian_core(const Matrix& a, const std::vector<std::size_t>& active_rows,
                                               const std::vector<std::size_t>& active_cols) {
  const std::size_t n = active_rows.size();
  const std::size_t m = active_cols.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(active_rows[i0 - 1], active_cols[j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) col_of[p[j] - 1] = active_cols[j - 1];
  }
  return col_of;
}

inline double optimum_value(const Matrix& a, const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& cols) {
  if (rows.empty()) return 0.0;
  const auto col_of = hungarian_core(a, rows, cols);
  double total = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) total += a(rows[k], col_of[k]);
  return total;
}

/// Replace +inf entries by a sentinel larger than any finite matching cost.
inline Matrix with_sentinels(const Matrix& cost, bool& any_finite) {
  double max_abs = 0.0;
  any_finite = false;
  for (double c : cost.data) {
    if (std::isnan(c) || c == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("hungarian_solve: entries must be finite or +inf");
    }
    if (std::isfinite(c)) {
      any_finite = true;
      max_abs = std::max(max_abs, std::abs(c));
    }
  }
  const double sentinel = (max_abs + 1.0) * 1e6 * static_cast<double>(std::max<std::size_t>(cost.rows, 1));
  Matrix out = cost;
  for (double& c : out.data) {
    if (!std::isfinite(c)) c = sentinel;
  }
  return out;
}

inline Matching to_matching(const Matrix& cost, const std::vector<std::size_t>& col_of_row) {
  Matching m;
  for (std::size_t i = 0; i < col_of_row.size(); ++i) {
    if (!std::isfinite(cost(i, col_of_row[i]))) {
      throw InfeasibleError("assignment: no feasible matching (sensor " + std::to_string(i) +
                            " can only be placed at an infeasible PoI)");
    }
    m.pairs.emplace_back(i, col_of_row[i]);
  }
  m.orientations.assign(m.pairs.size(), 0.0);
  m.total_cost = matching_cost(cost, col_of_row);
  return m;
}

}  // namespace detail

/**
 * Minimum-cost injection of the N rows (sensors) into the n >= N columns
 * (PoIs). Among optimal matchings the lexicographically smallest pair list is
 * returned: rows are fixed in order to the smallest column that still admits
 * an optimal completion. Throws InfeasibleError when every full matching uses
 * a +inf entry.
 */
inline Matching hungarian_solve(const Matrix& cost) {
  if (cost.rows == 0) return {};
  if (cost.rows > cost.cols) throw std::invalid_argument("hungarian_solve: need rows <= cols");
  bool any_finite = false;
  const Matrix a = detail::with_sentinels(cost, any_finite);
  if (!any_finite) throw InfeasibleError("assignment: no feasible matching (all entries infinite)");

  std::vector<std::size_t> rows(cost.rows), cols(cost.cols);
  for (std::size_t i = 0; i < cost.rows; ++i) rows[i] = i;
  for (std::size_t j = 0; j < cost.cols; ++j) cols[j] = j;
  const double opt = detail::optimum_value(a, rows, cols);
  double remaining = opt;

  std::vector<std::size_t> col_of_row(cost.rows);
  std::vector<std::size_t> free_cols = cols;
  for (std::size_t i = 0; i < cost.rows; ++i) {
    const std::vector<std::size_t> rest_rows(rows.begin() + static_cast<std::ptrdiff_t>(i) + 1, rows.end());
    const double tol = 1e-9 * std::max(1.0, std::abs(opt));
    bool fixed = false;
    for (std::size_t k = 0; k < free_cols.size() && !fixed; ++k) {
      const std::size_t j = free_cols[k];
      std::vector<std::size_t> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(k));
      const double value = a(i, j) + detail::optimum_value(a, rest_rows, rest_cols);
      if (value <= remaining + tol) {
        col_of_row[i] = j;
        remaining -= a(i, j);
        free_cols = std::move(rest_cols);
        fixed = true;
      }
    }
    if (!fixed) {
      // Round-off exceeded the tolerance; fall back to the plain optimum for the rest.
      const auto tail = detail::hungarian_core(a, std::vector<std::size_t>(rows.begin() + static_cast<std::ptrdiff_t>(i), rows.end()), free_cols);
      for (std::size_t r = 0; r < tail.size(); ++r) col_of_row[i + r] = tail[r];
      break;
    }
  }
  return detail::to_matching(cost, col_of_row);
}

/// Exhaustive search over all injections; the lexicographically first optimum wins.
inline Matching brute_force_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows;
  const std::size_t m = cost.cols;
  if (n > 8) throw std::invalid_argument("brute_force_assignment: at most 8 rows supported");
  if (n > m) throw std::invalid_argument("brute_force_assignment: need rows <= cols");
  if (n == 0) return {};

  std::vector<std::size_t> current(n), best;
  std::vector<char> used(m, 0);
  double best_cost = std::numeric_limits<double>::infinity();
  auto recurse = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      const double c = detail::matching_cost(cost, current);
      if (c < best_cost) {
        best_cost = c;
        best = current;
      }
      return;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      current[i] = j;
      self(self, i + 1);
      used[j] = 0;
    }
  };
  recurse(recurse, 0);
  if (best.empty()) throw InfeasibleError("assignment: no feasible matching (all injections infinite)");
  return detail::to_matching(cost, best);
}

/// Sensor i receives (pois[j], theta*(i, j)) for its matched PoI j.
inline std::vector<Pose> finalize_deployment(Matching& m, const PointList& pois, const Matrix& orientation) {
  std::vector<Pose> poses(m.pairs.size());
  m.orientations.resize(m.pairs.size());
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    const auto [i, j] = m.pairs[k];
    if (i >= poses.size() || j >= pois.size()) throw std::invalid_argument("finalize_deployment: invalid matching");
    poses[i] = {pois[j], orientation(i, j)};
    m.orientations[k] = orientation(i, j);
  }
  return poses;
}

}  // namespace steincov
