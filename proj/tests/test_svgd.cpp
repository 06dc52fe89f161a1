#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "steincov/svgd.hpp"

using namespace steincov;

namespace {

const Workspace kWs{0, 50, 0, 50, 100};

GaussianMixture target() { return GaussianMixture({{1.0, {25, 25}, 6.25 * Mat2::Identity()}}); }

SvgdConfig fixed_step(double eps) {
  SvgdConfig cfg;
  cfg.step_size = eps;
  cfg.adaptive_step = false;
  cfg.map_particle_count = 0;
  return cfg;
}

}  // namespace

TEST(Svgd, SingleParticleDirectionIsScore) {
  const auto gmm = target();
  ParticleSet ps{{{20, 27}}, 0};
  const Vec2 d = svgd_direction(ps, gmm, KernelSpec::rbf(3.0), 0);
  EXPECT_EQ(d, gmm.score({20, 27}));
}

TEST(Svgd, MirrorSymmetricPair) {
  const auto gmm = target();
  ParticleSet ps{{{22, 25}, {28, 25}}, 0};
  const KernelSpec spec = KernelSpec::rbf(5.0);
  const Vec2 a = svgd_direction(ps, gmm, spec, 0);
  const Vec2 b = svgd_direction(ps, gmm, spec, 1);
  EXPECT_NEAR(a.x(), -b.x(), 1e-14);
  EXPECT_NEAR(a.y(), b.y(), 1e-14);
}

TEST(Svgd, DirectionMatchesDoubleLoop) {
  std::mt19937_64 rng(31);
  const auto gmm = oracle::random_gmm(rng, 4, 2.0, 30.0);
  for (std::size_t n : {3u, 10u, 50u}) {
    const ParticleSet ps = uniform_particles(kWs, n, n);
    for (const KernelSpec& spec : {KernelSpec::rbf(median_heuristic(ps.positions)),
                                   kernel_from_variance(empirical_variance(ps.positions), 30.0)}) {
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2 fast = svgd_direction(ps, gmm, spec, i);
        const Vec2 slow = oracle::svgd_direction(ps.positions, gmm, spec, i);
        EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(Svgd, ZeroStepLeavesParticlesInPlace) {
  const ParticleSet ps = uniform_particles(kWs, 8, 2);
  const ParticleSet next = svgd_step(ps, target(), KernelSpec::rbf(10.0), fixed_step(0.0), kWs);
  EXPECT_EQ(next.positions, ps.positions);
  EXPECT_EQ(next.iteration, 1u);
}

TEST(Svgd, SingleParticleAscendsToMode) {
  const GaussianMixture gmm({{1.0, {0, 0}, Mat2::Identity()}});
  const Workspace ws{-10, 10, -10, 10, 20};
  ParticleSet ps{{{2, 0}}, 0};
  const SvgdConfig cfg = fixed_step(0.1);
  for (int it = 0; it < 200; ++it) ps = svgd_step(ps, gmm, KernelSpec::rbf(1.0), cfg, ws);
  EXPECT_LT(ps.positions[0].norm(), 1e-3);
}

TEST(Svgd, SingleParticleRunIsGradientAscent) {
  const auto gmm = target();
  SvgdConfig cfg = fixed_step(0.3);
  cfg.max_iterations = 50;
  cfg.convergence_tolerance = 1e-300;
  const ParticleSet start{{{10, 40}}, 0};
  const auto res = run(start, gmm, cfg, kWs);
  Vec2 x(10, 40);
  for (int it = 0; it < 50; ++it) x = kWs.clamp(x + 0.3 * gmm.score(x));
  EXPECT_EQ(res.particles.positions[0], x);
}

TEST(Svgd, StepClampsToWorkspace) {
  const GaussianMixture gmm({{1.0, {80, 25}, Mat2::Identity()}});
  ParticleSet ps{{{49, 25}}, 0};
  const auto next = svgd_step(ps, gmm, KernelSpec::rbf(1.0), fixed_step(1.0), kWs);
  EXPECT_EQ(next.positions[0], Vec2(50, 25));
}

TEST(Svgd, NonFiniteDirectionNamesParticle) {
  ParticleSet ps{{{10, 10}, {std::nan(""), 10}, {30, 30}}, 0};
  try {
    svgd_step(ps, target(), KernelSpec::rbf(1.0), fixed_step(0.1), kWs, {0, 2});
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("particle 1"), std::string::npos) << e.what();
  }
}

TEST(Svgd, ZeroIterationsReturnsInput) {
  SvgdConfig cfg;
  cfg.max_iterations = 0;
  const ParticleSet ps = uniform_particles(kWs, 5, 1);
  const auto res = run(ps, target(), cfg, kWs);
  EXPECT_EQ(res.particles.positions, ps.positions);
  EXPECT_TRUE(res.trace.rows.empty());
}

TEST(Svgd, VanillaMomentMatching) {
  SvgdConfig cfg;
  cfg.regulated = false;
  cfg.max_iterations = 500;
  const auto res = run(uniform_particles(kWs, 50, 1), target(), cfg, kWs);
  const auto vs = empirical_variance(res.particles.positions);
  EXPECT_LT((vs.mean - Vec2(25, 25)).norm(), 0.25);
  EXPECT_NEAR(vs.variance.trace(), 12.5, 0.2 * 12.5);
}

TEST(Svgd, RegulatedRunMeetsSpreadRadius) {
  SvgdConfig cfg;
  cfg.regulated = true;
  cfg.spread_radius = 5.0;
  cfg.max_iterations = 500;
  const auto res = run(uniform_particles(kWs, 50, 1), target(), cfg, kWs);
  EXPECT_GE(spread_deficit(res.particles, 5.0), 0.0);
}

TEST(Svgd, TraceIsRecordedPerIteration) {
  SvgdConfig cfg;
  cfg.max_iterations = 25;
  cfg.spread_radius = 2.0;
  const auto res = run(uniform_particles(kWs, 12, 3), target(), cfg, kWs);
  ASSERT_FALSE(res.trace.rows.empty());
  for (std::size_t k = 0; k < res.trace.rows.size(); ++k) EXPECT_EQ(res.trace.rows[k].iteration, k + 1);
  const auto& last = res.trace.rows.back();
  EXPECT_NEAR(last.spread_deficit, spread_deficit(res.particles, 2.0), 1e-12);
  EXPECT_NEAR(last.trace_var, empirical_variance(res.particles.positions).variance.trace(), 1e-12);
}

TEST(Svgd, ParticlesStayInsideWorkspace) {
  const GaussianMixture gmm({{0.5, {1, 1}, Mat2::Identity()}, {0.5, {49, 30}, 4 * Mat2::Identity()}});
  SvgdConfig cfg;
  cfg.step_size = 5.0;
  cfg.adaptive_step = false;
  ParticleSet ps = uniform_particles(kWs, 20, 4);
  const auto map = designate_map_particles(ps, gmm, 2);
  for (int it = 0; it < 60; ++it) {
    ps = svgd_step(ps, gmm, resolve_kernel(ps.positions, cfg), cfg, kWs, map);
    for (const auto& p : ps.positions) ASSERT_TRUE(kWs.contains(p));
  }
}

TEST(Svgd, Determinism) {
  SvgdConfig cfg;
  cfg.max_iterations = 100;
  const auto a = run(uniform_particles(kWs, 15, 9), target(), cfg, kWs);
  const auto b = run(uniform_particles(kWs, 15, 9), target(), cfg, kWs);
  EXPECT_EQ(a.particles.positions, b.particles.positions);
}

TEST(Svgd, SpreadDeficitExamples) {
  EXPECT_DOUBLE_EQ(spread_deficit(PointList{{0, 0}, {2, 0}}, 5.0), -21.0);
  EXPECT_DOUBLE_EQ(spread_deficit(PointList{{0, 0}, {5, 0}}, 5.0), 0.0);
  EXPECT_THROW(spread_deficit(PointList{{0, 0}}, 1.0), std::invalid_argument);
  const auto ps = uniform_particles(kWs, 20, 6);
  EXPECT_NEAR(spread_deficit(ps, 1.0), oracle::spread_deficit(ps.positions, 1.0), 1e-12 * 1000);
}

TEST(Svgd, MapParticleSelection) {
  const auto gmm = target();
  const ParticleSet ps{{{25, 25}, {10, 10}, {27, 25}, {40, 2}, {24, 20}}, 0};
  EXPECT_TRUE(designate_map_particles(ps, gmm, 0).empty());
  EXPECT_EQ(designate_map_particles(ps, gmm, 5), (std::vector<std::size_t>{0, 1, 2, 3, 4}));

  std::vector<std::size_t> order(5);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return gmm.log_density(ps.positions[a]) > gmm.log_density(ps.positions[b]); });
  std::vector<std::size_t> top(order.begin(), order.begin() + 2);
  std::sort(top.begin(), top.end());
  EXPECT_EQ(designate_map_particles(ps, gmm, 2), top);
}

TEST(Svgd, ConfigValidation) {
  SvgdConfig cfg;
  cfg.spread_radius = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  EXPECT_EQ(cfg.resolved_map_count(10), 1u);
  EXPECT_EQ(cfg.resolved_map_count(11), 2u);
  cfg.map_particle_count = 4;
  EXPECT_THROW(cfg.resolved_map_count(3), std::invalid_argument);
}
