#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "steincov/baselines.hpp"

using namespace steincov;

namespace {

const Workspace kWs{0, 50, 0, 50, 100};

GaussianMixture uniformish() { return GaussianMixture({{1.0, {25, 25}, 1e8 * Mat2::Identity()}}); }

}  // namespace

TEST(Baselines, OneSiteLabelsEverything) {
  const auto part = partition_grid({{3, 3}}, {0.0}, kWs);
  for (auto l : part.labels) EXPECT_EQ(l, 0u);
}

TEST(Baselines, SymmetricSitesSplitAtMidline) {
  const Workspace ws{0, 10, 0, 10, 10};
  const auto part = partition_grid({{2.5, 5}, {7.5, 5}}, {0.0, 0.0}, ws);
  for (std::size_t c = 0; c < part.labels.size(); ++c) {
    EXPECT_EQ(part.labels[c], ws.cell_center(c).x() < 5 ? 0u : 1u);
  }
}

TEST(Baselines, PowerWeightsMatchPerCellComparison) {
  const PointList sites{{15, 25}, {35, 25}};
  // Weight 25 moves the bisector from x = 25 to x = 25.625, past the column at 25.25.
  const std::vector<double> w{25.0, 0.0};
  const auto part = partition_grid(sites, w, kWs);
  std::size_t first = 0;
  for (std::size_t c = 0; c < part.labels.size(); ++c) {
    const Vec2 x = kWs.cell_center(c);
    const double d0 = (x - sites[0]).squaredNorm() - 25.0;
    const double d1 = (x - sites[1]).squaredNorm();
    EXPECT_EQ(part.labels[c], d1 < d0 ? 1u : 0u);
    first += part.labels[c] == 0;
  }
  EXPECT_GT(first, part.labels.size() / 2);  // boundary shifted toward the unweighted site
}

TEST(Baselines, ZeroWeightsAreNearestSite) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 50);
  PointList sites;
  for (int j = 0; j < 7; ++j) sites.emplace_back(u(rng), u(rng));
  const auto part = partition_grid(sites, std::vector<double>(7, 0.0), kWs);
  for (std::size_t c = 0; c < part.labels.size(); c += 13) {
    const Vec2 x = kWs.cell_center(c);
    std::size_t best = 0;
    for (std::size_t j = 1; j < sites.size(); ++j) {
      if ((x - sites[j]).norm() < (x - sites[best]).norm()) best = j;
    }
    EXPECT_EQ(part.labels[c], best);
  }
}

TEST(Baselines, CentroidExamples) {
  const auto grid = grid_evaluate(uniformish(), kWs);
  const auto part = partition_grid({{3, 40}}, {0.0}, kWs);
  const auto c = weighted_centroid(part, 0, grid);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->x(), 25.0, 1e-9);
  EXPECT_NEAR(c->y(), 25.0, 1e-9);

  const Workspace ws{0, 10, 0, 10, 10};
  const auto peaked = grid_evaluate(GaussianMixture({{1.0, {3.5, 7.5}, 1e-4 * Mat2::Identity()}}), ws);
  const auto p1 = partition_grid({{1, 1}}, {0.0}, ws);
  EXPECT_LT((*weighted_centroid(p1, 0, peaked) - Vec2(3.5, 7.5)).norm(), 1e-9);
}

TEST(Baselines, CentroidMatchesDirectSummation) {
  std::mt19937_64 rng(2);
  const auto gmm = oracle::random_gmm(rng, 4);
  const PointList sites{{10, 10}, {40, 15}, {25, 40}};
  const auto part = partition_grid(sites, {0, 0, 0}, kWs);
  for (std::size_t j = 0; j < 3; ++j) {
    double sx = 0, sy = 0, sm = 0;
    for (std::size_t c = 0; c < kWs.cell_count(); ++c) {
      if (part.labels[c] != j) continue;
      const Vec2 x = kWs.cell_center(c);
      const double p = oracle::mixture_density(gmm, x);
      sx += p * x.x();
      sy += p * x.y();
      sm += p;
    }
    const auto c = weighted_centroid(part, j, grid_evaluate(gmm, kWs));
    EXPECT_NEAR(c->x(), sx / sm, 1e-10);
    EXPECT_NEAR(c->y(), sy / sm, 1e-10);
  }
}

TEST(Baselines, EmptyCellIsReportedAndSiteStays) {
  // The second site is dominated everywhere by the heavily weighted first one.
  const PointList sites{{25, 25}, {26, 25}};
  const auto res = lloyd_run(sites, {10000.0, 0.0}, uniformish(), kWs, 3);
  ASSERT_FALSE(res.empty_cells.empty());
  EXPECT_EQ(res.empty_cells[0], 1u);
  EXPECT_EQ(res.sites[1], sites[1]);
}

TEST(Baselines, FixedPointConvergesImmediately) {
  const auto gmm = uniformish();
  const auto first = lloyd_run({{12.5, 25}, {37.5, 25}}, {0, 0}, gmm, kWs, 1);
  const auto second = lloyd_run(first.sites, {0, 0}, gmm, kWs, 5);
  EXPECT_EQ(second.iterations, 1u);
  EXPECT_TRUE(second.converged);
  EXPECT_NEAR(second.cost_history.front(), second.cost_history.back(), 1e-9);
}

TEST(Baselines, CostHistoryNonincreasing) {
  std::mt19937_64 rng(3);
  for (int s = 0; s < 5; ++s) {
    const auto gmm = oracle::random_gmm(rng, 6, 2.0, 30.0);
    const auto sites = sample_sites(gmm, kWs, 8, s);
    std::vector<double> w(8);
    for (std::size_t j = 0; j < 8; ++j) w[j] = s % 2 ? 4.0 + j : 0.0;
    const auto res = lloyd_run(sites, w, gmm, kWs, 50);
    ASSERT_EQ(res.cost_history.size(), res.iterations + 1);
    for (std::size_t k = 1; k < res.cost_history.size(); ++k) {
      EXPECT_LE(res.cost_history[k], res.cost_history[k - 1] + 1e-9);
    }
  }
}

TEST(Baselines, SingleSiteFindsGaussianMean) {
  const GaussianMixture gmm({{1.0, {18.3, 31.7}, 4 * Mat2::Identity()}});
  const auto res = lloyd_run({{5, 5}}, {0.0}, gmm, kWs, 50);
  EXPECT_LT((res.sites[0] - Vec2(18.3, 31.7)).norm(), kWs.cell_width());
}

TEST(Baselines, LocationalCostIdentities) {
  const Workspace ws{0, 10, 0, 10, 10};
  const GaussianMixture spike({{1.0, {4.5, 4.5}, 1e-4 * Mat2::Identity()}});
  EXPECT_NEAR(locational_cost({{4.5, 4.5}}, {0.0}, spike, ws), 0.0, 1e-12);

  std::mt19937_64 rng(4);
  const auto gmm = oracle::random_gmm(rng, 3);
  const PointList sites{{10, 10}, {30, 35}, {40, 10}};
  const std::vector<double> w{2.0, 5.0, 1.0};
  const auto part = partition_grid(sites, w, kWs);
  const auto grid = grid_evaluate(gmm, kWs);
  double zero_weight_same_labels = 0.0, weight_mass = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const std::size_t j = part.labels[c];
    zero_weight_same_labels += (grid.center(c) - sites[j]).squaredNorm() * grid.mass[c];
    weight_mass += w[j] * grid.mass[c];
  }
  EXPECT_NEAR(locational_cost(sites, w, gmm, kWs), zero_weight_same_labels - weight_mass, 1e-9);
}

TEST(Baselines, CostStableUnderRefinement) {
  std::mt19937_64 rng(5);
  const auto gmm = oracle::random_gmm(rng, 10, 2.0, 20.0);
  const auto sites = sample_sites(gmm, kWs, 10, 1);
  const std::vector<double> w(10, 0.0);
  const double coarse = locational_cost(sites, w, gmm, kWs);
  const double fine = locational_cost(sites, w, gmm, kWs.with_resolution(200));
  EXPECT_LT(std::abs(coarse - fine) / fine, 0.02);
}

TEST(Baselines, RejectsMismatchedWeights) {
  EXPECT_THROW(partition_grid({{1, 1}}, {}, kWs), std::invalid_argument);
  EXPECT_THROW(partition_grid({}, {}, kWs), std::invalid_argument);
}
