#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mfc/envs.hpp"
#include "test_support.hpp"

namespace mfc {
namespace {

using std::numbers::pi;
using testing::random_simplex_point;

CyberParams all_rates_off() {
  CyberParams p;
  p.lambda = p.q_rec_D = p.q_rec_U = p.v_H = 0.0;
  p.q_inf_D = p.q_inf_U = 0.0;
  p.beta_UU = p.beta_UD = p.beta_DU = p.beta_DD = 0.0;
  return p;
}

std::vector<double> random_actions(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> a(n);
  for (double& x : a) x = u(rng);
  return a;
}

TEST(CyberGenerator, OnlyDirectInfectionWhenAllSusceptible) {
  CyberParams p;
  const auto mu = new_distribution(std::vector<double>{0, 0, 0, 1});
  const auto g = cyber_generator(mu, std::vector<double>(4, 0.0), {1.0}, p);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (r == c) continue;
      double expected = 0.0;
      if (r == kUI && c == kUS) expected = p.v_H * p.q_inf_U;
      if (r == kDI && c == kDS) expected = p.v_H * p.q_inf_D;
      if (r == kDS && c == kDI) continue;  // recovery rates do not depend on mu
      if (r == kUS && c == kUI) continue;
      EXPECT_DOUBLE_EQ(g[r][c], expected) << r << "," << c;
    }
  }
}

TEST(CyberGenerator, ColumnsSumToZero) {
  Rng rng(3);
  CyberParams p;
  for (int k = 0; k < 1000; ++k) {
    const auto mu = new_distribution(random_simplex_point(4, rng));
    const auto g = cyber_generator(mu, random_actions(4, rng), {1.0}, p);
    for (std::size_t c = 0; c < 4; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < 4; ++r) s += g[r][c];
      EXPECT_LE(std::abs(s), 1e-14);
    }
  }
}

TEST(CyberGenerator, ZeroRatesGiveZeroMatrix) {
  const auto mu = new_distribution(std::vector<double>{0.1, 0.2, 0.3, 0.4});
  const auto g = cyber_generator(mu, std::vector<double>(4, 1.0), {1.0}, all_rates_off());
  for (const auto& row : g) {
    for (double v : row) EXPECT_EQ(v, 0.0);
  }
}

TEST(CyberGenerator, SwitchingUsesSourceStateAction) {
  CyberParams p;
  const auto mu = new_distribution(std::vector<double>{0.25, 0.25, 0.25, 0.25});
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4};
  const auto g = cyber_generator(mu, a, {1.0}, p);
  EXPECT_DOUBLE_EQ(g[kDI][kUI], p.lambda * a[kUI]);
  EXPECT_DOUBLE_EQ(g[kUI][kDI], p.lambda * a[kDI]);
  EXPECT_DOUBLE_EQ(g[kDS][kUS], p.lambda * a[kUS]);
  EXPECT_DOUBLE_EQ(g[kUS][kDS], p.lambda * a[kDS]);
}

TEST(CyberGenerator, RejectsActionsOutsideUnitInterval) {
  const auto mu = new_distribution(std::vector<double>{0.25, 0.25, 0.25, 0.25});
  EXPECT_MFC_ERROR(cyber_generator(mu, std::vector<double>{0, 0, 2, 0}, {1.0}, CyberParams{}),
                   ErrorKind::BadActionRange);
}

TEST(CyberStep, ZeroGeneratorIsIdentity) {
  const auto mu = new_distribution(std::vector<double>{0.1, 0.2, 0.3, 0.4});
  const auto r = cyber_step(mu, std::vector<double>(4, 1.0), {1.0}, all_rates_off());
  EXPECT_EQ(r.next_state, mu);
}

TEST(CyberStep, SingleActiveRate) {
  CyberParams p = all_rates_off();
  p.v_H = 0.6;
  p.q_inf_U = 0.5;
  p.dt = 0.1;
  const auto mu = new_distribution(std::vector<double>{0, 0, 0, 1});
  const auto r = cyber_step(mu, std::vector<double>(4, 0.0), {1.0}, p);
  const double moved = 0.1 * 0.6 * 0.5;
  EXPECT_DOUBLE_EQ(r.next_state[kDI], 0.0);
  EXPECT_DOUBLE_EQ(r.next_state[kDS], 0.0);
  EXPECT_DOUBLE_EQ(r.next_state[kUI], moved);
  EXPECT_DOUBLE_EQ(r.next_state[kUS], 1.0 - moved);
}

TEST(CyberStep, ConservesMassAndPositivity) {
  Rng rng(5);
  CyberEnv env(CyberParams{});
  for (int k = 0; k < 1000; ++k) {
    const auto mu = new_distribution(random_simplex_point(4, rng));
    const auto r = env.step(mu, random_actions(4, rng), env.neutral_noise());
    double s = 0.0;
    for (double x : r.next_state.weights()) {
      EXPECT_GE(x, 0.0);
      s += x;
    }
    EXPECT_LE(std::abs(s - 1.0), 1e-12);
  }
}

TEST(CyberStep, LargeStepIsRejected) {
  CyberParams p;
  p.dt = 5.0;
  EXPECT_MFC_ERROR(p.validate(), ErrorKind::InvalidParameter);
  const auto mu = new_distribution(std::vector<double>{0, 0, 0, 1});
  EXPECT_MFC_ERROR(cyber_step(mu, std::vector<double>(4, 1.0), {1.0}, p), ErrorKind::UnstableStep);
}

TEST(CyberReward, Examples) {
  CyberParams p;
  EXPECT_EQ(cyber_reward(new_distribution(std::vector<double>{0, 0, 0, 1}), p), 0.0);
  EXPECT_DOUBLE_EQ(cyber_reward(new_distribution(std::vector<double>{1, 0, 0, 0}), p),
                   -(p.k_D + p.k_I));
  p.k_D = 2.0;
  p.k_I = 3.0;
  EXPECT_DOUBLE_EQ(cyber_reward(new_distribution(std::vector<double>{0.25, 0.25, 0.25, 0.25}), p),
                   -2.5);
}

TEST(CyberEnv, StepMatchesFreeFunctionAndIsDeterministic) {
  CyberEnv env(CyberParams{});
  Rng rng(1);
  const auto mu = new_distribution(std::vector<double>{0.4, 0.1, 0.2, 0.3});
  const std::vector<double> a{1, 0, 1, 0};
  const auto r1 = env.sample_step(mu, a, rng);
  const auto r2 = env.sample_step(mu, a, rng);
  const auto direct = cyber_step(mu, a, {1.0}, env.params());
  EXPECT_EQ(r1.next_state, direct.next_state);
  EXPECT_EQ(r1.next_state, r2.next_state);
  EXPECT_EQ(r1.reward, direct.reward);
}

TEST(CyberEnv, NoisyStepsReproducibleFromSeed) {
  CyberParams p;
  p.common_noise_std = 0.3;
  CyberEnv env(p);
  const auto mu = new_distribution(std::vector<double>{0.4, 0.1, 0.2, 0.3});
  const std::vector<double> a{1, 0, 1, 0};
  Rng r1(9);
  Rng r2(9);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(env.sample_step(mu, a, r1).next_state, env.sample_step(mu, a, r2).next_state);
}

TEST(SwarmPhi, Examples) {
  EXPECT_NEAR(swarm_phi(0.0), -2.0 * pi * pi, 1e-12);
  EXPECT_NEAR(swarm_phi(0.25), 2.0 * pi * pi + 2.0, 1e-12);
  EXPECT_NEAR(swarm_phi(0.5), -2.0 * pi * pi, 1e-12);
}

SwarmParams swarm(std::size_t n, double sigma = 1.0) {
  SwarmParams p;
  p.n_points = n;
  p.sigma = sigma;
  const double h = 1.0 / static_cast<double>(n);
  p.dt = 0.4 * h * h;
  return p;
}

TEST(SwarmStep, NoDynamicsWithoutVelocityOrDiffusion) {
  const SwarmParams p = swarm(32, 0.0);
  Rng rng(2);
  auto w = random_simplex_point(32, rng);
  for (double& x : w) x *= 32.0;
  const auto m = new_density(w, p.cell_width(), false);
  const auto r = swarm_step(m, std::vector<double>(32, 0.0), {0.0}, p);
  for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR(r.next_state[i], m[i], 1e-15);
}

TEST(SwarmStep, UniformDensityIsInvariantUnderConstantVelocity) {
  const SwarmParams p = swarm(32, 0.0);
  const auto m = new_density(std::vector<double>(32, 1.0), p.cell_width());
  const auto r = swarm_step(m, std::vector<double>(32, 3.0), {0.0}, p);
  for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR(r.next_state[i], 1.0, 1e-14);
}

TEST(SwarmStep, StationaryPairMovesByOrderH) {
  // |M' - M| / dt for (mu*, a*) shrinks at least linearly in h.
  std::vector<double> residual;
  for (std::size_t n : {64u, 128u, 256u}) {
    const SwarmParams p = swarm(n);
    const auto m = swarm_stationary_density(p);
    const auto next = swarm_advance(m.weights(), swarm_optimal_control_profile(p), 0.0, p);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (next[i] - m[i]) * (next[i] - m[i]);
    residual.push_back(std::sqrt(p.cell_width() * s) / p.dt);
  }
  EXPECT_GE(residual[0] / residual[1], 1.5);
  EXPECT_GE(residual[1] / residual[2], 1.5);
}

TEST(SwarmStep, ConservesMassBeforeRenormalization) {
  const SwarmParams p = swarm(64);
  Rng rng(4);
  std::uniform_real_distribution<double> speed(-p.max_stable_speed(), p.max_stable_speed());
  for (int k = 0; k < 1000; ++k) {
    auto w = random_simplex_point(64, rng);
    for (double& x : w) x *= 64.0;
    std::vector<double> a(64);
    for (double& x : a) x = speed(rng);
    const auto next = swarm_advance(w, a, 0.0, p);
    double before = 0.0;
    double after = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
      before += w[i];
      after += next[i];
      EXPECT_GE(next[i], -1e-12);
    }
    EXPECT_LE(std::abs(after - before) * p.cell_width(), 1e-10);
  }
}

TEST(SwarmStep, StabilityConditions) {
  SwarmParams p = swarm(32);
  const auto m = new_density(std::vector<double>(32, 1.0), p.cell_width());
  const double too_fast = 1.01 * p.max_stable_speed();
  EXPECT_MFC_ERROR(swarm_step(m, std::vector<double>(32, too_fast), {0.0}, p), ErrorKind::CFLViolation);
  EXPECT_NO_THROW(swarm_step(m, std::vector<double>(32, 0.99 * p.max_stable_speed()), {0.0}, p));
  p.dt *= 2.0;
  EXPECT_MFC_ERROR(p.validate(), ErrorKind::InvalidParameter);
}

TEST(SwarmStep, SubstepsComposeAdvances) {
  SwarmParams p = swarm(32);
  p.substeps = 3;
  const auto m = swarm_stationary_density(p);
  const std::vector<double> a(32, 1.5);
  std::vector<double> manual(m.weights().begin(), m.weights().end());
  for (int k = 0; k < 3; ++k) manual = swarm_advance(manual, a, 0.0, p);
  const auto r = swarm_step(m, a, {0.0}, p);
  for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR(r.next_state[i], manual[i], 1e-13);
}

TEST(SwarmReward, UniformDensityApproachesIntegralOfPhi) {
  const SwarmParams p = swarm(4096);
  const auto m = new_density(std::vector<double>(4096, 1.0), p.cell_width());
  const double r0 = swarm_reward(m, std::vector<double>(4096, 0.0), p);
  EXPECT_NEAR(r0, -pi * pi, 1e-9);
  const double rc = swarm_reward(m, std::vector<double>(4096, 2.0), p);
  EXPECT_NEAR(rc, r0 - 2.0, 1e-12);
}

TEST(SwarmReward, FloorKeepsLogFinite) {
  const SwarmParams p = swarm(8);
  std::vector<double> w(8, 8.0 / 7.0);
  w[3] = 0.0;
  const auto m = new_density(w, p.cell_width());
  EXPECT_TRUE(std::isfinite(swarm_reward(m, std::vector<double>(8, 0.0), p)));
}

TEST(SwarmAnalytic, StationaryDensityIsNormalized) {
  const SwarmParams p = swarm(128);
  EXPECT_NEAR(swarm_stationary_density(p).mass(), 1.0, 1e-12);
  EXPECT_NEAR(swarm_optimal_control(0.0), 2.0 * pi, 1e-12);
}

TEST(LogisticEnv, StepIsAProbabilityAndRewardMatchesFormula) {
  LogisticEnv env(LogisticParams{});
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    const auto mu = new_distribution(random_simplex_point(2, rng));
    const std::vector<double> a{static_cast<double>(k % 2), static_cast<double>((k / 2) % 2)};
    const auto r = env.step(mu, a, env.neutral_noise());
    EXPECT_NEAR(r.next_state.mass(), 1.0, 1e-15);
    const auto& q = env.params();
    const double gap = mu[0] - q.target;
    EXPECT_NEAR(r.reward, -q.weight * gap * gap - q.cost * (mu[0] * a[0] + mu[1] * a[1]), 1e-15);
    EXPECT_LE(std::abs(r.reward), env.reward_bound());
  }
}

TEST(Environment, DimensionMismatch) {
  CyberEnv cyber(CyberParams{});
  const auto mu = new_distribution(std::vector<double>{0.5, 0.5});
  EXPECT_MFC_ERROR(cyber.step(mu, std::vector<double>(4, 0.0), cyber.neutral_noise()),
                   ErrorKind::DimensionMismatch);
}

}  // namespace
}  // namespace mfc
