#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "mfc/analysis.hpp"
#include "test_support.hpp"

namespace mfc {
namespace {

using testing::FunctionEnv;
using testing::random_simplex_point;

double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TEST(Softmax, Examples) {
  const auto u = softmax_tau(std::vector<double>{2.0, 2.0, 2.0}, 5.0);
  for (double p : u) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  const auto p = softmax_tau(std::vector<double>{0.0, std::log(3.0)}, 1.0);
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);
  const double gap = 0.01;
  const auto c = softmax_tau(std::vector<double>{0.0, gap, -1.0}, 1e4 / gap);
  EXPECT_GE(c[1], 1.0 - 1e-6);
  const auto big = softmax_tau(std::vector<double>{1e6, 0.0}, 10.0);
  EXPECT_EQ(big[0], 1.0);
}

TEST(Softmax, ShiftInvarianceAndLipschitz) {
  Rng rng(0);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 500; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 7);
    std::vector<double> x(n), y(n), xs(n);
    const double shift = u(rng), tau = std::abs(u(rng)) + 0.1;
    double sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = x[i] + 0.3 * u(rng);
      xs[i] = x[i] + shift;
      sup = std::max(sup, std::abs(x[i] - y[i]));
    }
    const auto sx = softmax_tau(x, tau);
    EXPECT_NEAR(std::accumulate(sx.begin(), sx.end(), 0.0), 1.0, 1e-12);
    EXPECT_LE(l2(sx, softmax_tau(xs, tau)), 1e-12);
    EXPECT_LE(l2(sx, softmax_tau(y, tau)), tau * sup * std::sqrt(static_cast<double>(n)) + 1e-9);
  }
}

TEST(Argmaxe, Examples) {
  EXPECT_EQ(argmaxe(std::vector<double>{1, 2, 2}), (std::vector<double>{0, 0.5, 0.5}));
  EXPECT_EQ(argmaxe(std::vector<double>{-1, 0, 4}), (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(argmaxe(std::vector<double>{3, 3, 3, 3}), (std::vector<double>(4, 0.25)));
  EXPECT_EQ(argmaxe(std::vector<double>{1, 2, 2 - 1e-13}), (std::vector<double>{0, 0.5, 0.5}));
  const std::vector<double> x{0.3, -2.0, 0.3, 0.1};
  std::vector<double> cx(x), sx(x);
  for (auto& v : cx) v *= 7.5;
  for (auto& v : sx) v += 100.0;
  EXPECT_EQ(argmaxe(x), argmaxe(cx));
  EXPECT_EQ(argmaxe(x), argmaxe(sx));
}

TEST(TheoremError, Examples) {
  BoundInputs in;
  in.epsilon = 0.0;
  in.grid_fineness = 0.0;
  EXPECT_EQ(theorem_error(in), 0.0);
  in = {};
  in.gamma = 0.5;
  in.grid_fineness = 0.1;
  in.epsilon = 0.01;
  EXPECT_NEAR(theorem_error(in), 0.41, 1e-15);
  const double base = theorem_error(in);
  for (double BoundInputs::*f : {&BoundInputs::epsilon, &BoundInputs::grid_fineness, &BoundInputs::lipschitz_value,
                                 &BoundInputs::lipschitz_transition, &BoundInputs::lipschitz_reward}) {
    BoundInputs more = in;
    more.*f *= 1.5;
    EXPECT_GT(theorem_error(more), base);
  }
  in.gamma = 1.0;
  EXPECT_MFC_ERROR(theorem_error(in), ErrorKind::InvalidParameter);
}

TEST(NepiOrder, Monotonicity) {
  BoundInputs in;
  in.covering_time = 20;
  in.grid_size = 9;
  in.profile_count = 4;
  in.value_max = 2.0;
  const auto base = nepi_order_terms(in);
  EXPECT_EQ(base.beta, 0.25);
  BoundInputs twice = in;
  twice.covering_time = 40;
  EXPECT_GT(nepi_order(twice), base.total);
  BoundInputs half = in;
  half.epsilon /= 2;
  EXPECT_GE(nepi_order_terms(half).first_term / base.first_term, std::pow(4.0, 1.0 / in.kappa));
  EXPECT_EQ(base.covering_time_delta, std::ceil(20 * std::log2(1 / 0.2)));
  in.epsilon = 0.0;
  EXPECT_MFC_ERROR(nepi_order(in), ErrorKind::InvalidParameter);
}

TEST(CorollaryBound, Examples) {
  EXPECT_NEAR(corollary_bound(1.0, 0.1, 4, 2.0), 0.1 + 8 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(corollary_bound(1.0, 0.1, 4, 2.0), 1.1827, 1e-4);
  EXPECT_NEAR(corollary_bound(1e-12, 0.3, 4, 1.0), 8.0, 1e-9);
  double prev = INFINITY;
  for (double tau = 0.5; tau < 20; tau += 0.5) {
    const double b = corollary_bound(tau, 0.0, 3, 0.7);
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(CorollaryBound, OptimalTauMatchesClosedForm) {
  for (double eps : {1e-3, 0.05, 0.4}) {
    for (double gap : {0.1, 1.0, 3.0}) {
      const std::size_t a = 16;
      const double closed = std::log(2.0 * a * gap / eps) / gap;
      const double got = corollary_optimal_tau(eps, a, gap);
      if (closed > 0) {
        EXPECT_NEAR(got, closed, 1e-6 * std::max(1.0, closed));
      }
    }
  }
}

ExactQTable table(std::size_t points, std::size_t profiles, std::vector<double> v) {
  return {points, profiles, std::move(v)};
}

TEST(ActionGap, Examples) {
  EXPECT_EQ(action_gap(table(1, 3, {1, 3, 3})), 2.0);
  EXPECT_EQ(action_gap(table(2, 3, {1, 3, 3, 0, 0.5, 0.25})), 0.25);
  EXPECT_TRUE(std::isinf(action_gap(table(2, 2, {1, 1, 4, 4}))));
  EXPECT_MFC_ERROR(action_gap(table(2, 1, {1, 2})), ErrorKind::InvalidParameter);
}

TEST(ActionGap, PositiveOnCyberInstance) {
  const CyberEnv env{CyberParams{}};
  const ProjectedModel model(env, SimplexGrid(4, 3), NoisePanel::deterministic(env));
  EXPECT_GT(action_gap(exact_q(model, 0.5, 1e-10)), 0.0);
}

LearnedQTable learned_from(const ExactQTable& q, const SimplexGrid& grid, std::size_t states, std::size_t actions,
                           double shift) {
  LearnedQTable l(grid, enumerate_action_profiles(states, actions));
  for (std::size_t k = 0; k < q.values.size(); ++k) l.values[k] = q.values[k] + shift;
  return l;
}

TEST(CorollaryCheck, ExactTableAndShift) {
  const LogisticEnv env{LogisticParams{}};
  const SimplexGrid grid(2, 8);
  const auto q = exact_q(ProjectedModel(env, grid, NoisePanel::deterministic(env)), 0.5, 1e-12);
  const auto same = empirical_corollary_check(learned_from(q, grid, 2, 2, 0.0), q, 1e6);
  EXPECT_TRUE(same.pass);
  EXPECT_LE(same.max_distance, 1e-9);
  const auto r1 = empirical_corollary_check(learned_from(q, grid, 2, 2, 0.0), q, 10.0);
  const auto r2 = empirical_corollary_check(learned_from(q, grid, 2, 2, 0.37), q, 10.0);
  EXPECT_NEAR(r1.max_distance, r2.max_distance, 1e-12);
  EXPECT_NEAR(r2.eps_prime, 0.37, 1e-12);
  EXPECT_TRUE(r2.pass);
  const LearnedQTable other(SimplexGrid(2, 4), enumerate_action_profiles(2, 2));
  EXPECT_MFC_ERROR(empirical_corollary_check(other, q, 1.0), ErrorKind::GridMismatch);
}

TEST(SwarmMetrics, ExactControlAndResidualRefinement) {
  SwarmParams p;
  p.n_points = 64;
  p.dt = 2e-5;
  EXPECT_EQ(swarm_control_error(swarm_optimal_control_profile(p), p), 0.0);
  EXPECT_EQ(swarm_density_error(swarm_stationary_density(p), p), 0.0);
  const double r64 = swarm_stationarity_residual(p);
  p.n_points = 128;
  p.dt = 5e-6;
  const double r128 = swarm_stationarity_residual(p);
  EXPECT_GE(r64 / r128, 1.5);
  EXPECT_LE(r64 / r128, 2.5);
  std::vector<double> zero(128, 0.0);
  EXPECT_GT(swarm_control_error(zero, p), 0.0);
}

TEST(SwarmMetrics, UniformStartRelaxes) {
  SwarmParams p;
  p.n_points = 64;
  p.dt = 4e-5;
  p.substeps = 100;
  const auto astar = swarm_optimal_control_profile(p);
  const Policy pol = [&](const DistributionVector&) { return astar; };
  const auto uniform = new_density(std::vector<double>(64, 1.0), 1.0 / 64);
  const auto trace = swarm_density_error_trace(pol, p, uniform, 500);
  ASSERT_EQ(trace.size(), 500u);
  double prev = INFINITY;
  for (std::size_t w = 0; w < 500; w += 100) {
    double mean = 0.0;
    for (std::size_t k = w; k < w + 100; ++k) mean += trace[k] / 100;
    EXPECT_LE(mean, prev);
    prev = mean;
  }
  const auto m = swarm_metrics(pol, p, uniform, 500);
  EXPECT_EQ(m.control_error, 0.0);
  EXPECT_NEAR(m.density_error, trace.back(), 1e-15);
}

TEST(LipschitzProbe, ConstantAndLinearMaps) {
  const FunctionEnv constant(
      2, 2, [](const DistributionVector&, std::span<const double>, double) { return std::vector<double>{0.4, 0.6}; },
      [](const DistributionVector&, std::span<const double>) { return 1.0; }, 1.0);
  const SimplexGrid grid(2, 16);
  const auto c = lipschitz_probe(constant, grid_sampler(grid), profile_sampler(constant),
                                 NoisePanel::deterministic(constant), 200, 1);
  EXPECT_EQ(c.transition, 0.0);
  EXPECT_EQ(c.reward, 0.0);

  // P(1,-1)^T = (0.5, -0.5): ratio 0.5 for every pair; reward 2 mu_0 has slope 2 / sqrt 2.
  const FunctionEnv linear(
      2, 2,
      [](const DistributionVector& mu, std::span<const double>, double) {
        return std::vector<double>{0.7 * mu[0] + 0.2 * mu[1], 0.3 * mu[0] + 0.8 * mu[1]};
      },
      [](const DistributionVector& mu, std::span<const double>) { return 2.0 * mu[0]; }, 2.0);
  const auto l = lipschitz_probe(linear, grid_sampler(grid), profile_sampler(linear),
                                 NoisePanel::deterministic(linear), 200, 2);
  EXPECT_NEAR(l.transition, 0.5, 0.025);
  EXPECT_NEAR(l.reward, std::sqrt(2.0), 0.05 * std::sqrt(2.0));
}

TEST(LipschitzProbe, NestedSamplesAreMonotone) {
  const LogisticEnv env{LogisticParams{}};
  const SimplexGrid grid(2, 32);
  double prev_t = 0.0, prev_r = 0.0;
  for (std::size_t n : {5u, 20u, 80u, 320u}) {
    const auto e = lipschitz_probe(env, grid_sampler(grid), profile_sampler(env), NoisePanel::deterministic(env), n, 7);
    EXPECT_LE(e.pairs, n);  // coincident draws are skipped
    EXPECT_GT(e.pairs, 0u);
    EXPECT_GE(e.transition, prev_t);
    EXPECT_GE(e.reward, prev_r);
    prev_t = e.transition;
    prev_r = e.reward;
  }
}

TEST(GridRefinement, ShrinksOnLogisticInstance) {
  const LogisticEnv env{LogisticParams{}};
  const std::vector<std::size_t> res{4, 8, 16};
  const auto rows = grid_refinement(env, res, 0.5, 1e-12, NoisePanel::deterministic(env), SimplexGrid(2, 2000));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GT(rows[0].successive_difference, rows[1].successive_difference);
  EXPECT_GT(rows[0].error_vs_reference, rows[1].error_vs_reference);
  EXPECT_EQ(rows[2].error_vs_reference, 0.0);
  const auto q = exact_q(ProjectedModel(env, SimplexGrid(2, 8), NoisePanel::deterministic(env)), 0.5, 1e-12);
  EXPECT_EQ(projected_q_distance(q, SimplexGrid(2, 8), q, SimplexGrid(2, 8), SimplexGrid(2, 100)), 0.0);
}

}  // namespace
}  // namespace mfc
