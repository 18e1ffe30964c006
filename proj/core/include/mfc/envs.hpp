#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "mfc/rng.hpp"
#include "mfc/simplex.hpp"

namespace mfc {

/// One draw of the common noise. Meaning is environment specific: a
/// multiplicative factor on infection rates (cyber), an additive drift on
/// every cell velocity (swarm), an additive shift of the logit (logistic).
struct CommonNoiseSample {
  double value = 0.0;
};

struct TransitionResult {
  DistributionVector next_state;
  double reward = 0.0;
};

/// Transition map and lifted reward of a mean-field MDP whose state is a
/// distribution and whose action is one control value per underlying state
/// (or grid cell).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t state_dim() const = 0;
  /// |A| for finite action sets; 0 when actions are real valued.
  virtual std::size_t action_count() const = 0;

  virtual TransitionResult step(const DistributionVector& mu, std::span<const double> action,
                                CommonNoiseSample noise) const = 0;
  virtual double reward(const DistributionVector& mu, std::span<const double> action) const = 0;

  virtual bool has_common_noise() const = 0;
  /// The sample that reproduces the noise-free dynamics.
  virtual CommonNoiseSample neutral_noise() const = 0;
  virtual CommonNoiseSample sample_noise(Rng& rng) const = 0;

  /// Bound C_f on |reward|; +inf when the reward is unbounded.
  virtual double reward_bound() const { return std::numeric_limits<double>::infinity(); }

  /// Draws one i.i.d. common-noise sample (or the neutral one when noise is
  /// disabled, consuming no randomness) and steps.
  TransitionResult sample_step(const DistributionVector& mu, std::span<const double> action,
                               Rng& rng) const;
};

// ---------------------------------------------------------------------------
// Cyber security model. Underlying states in the fixed order below; action 1
// at a state asks its computers to switch protection level at rate lambda.

enum CyberState : std::size_t { kDI = 0, kDS = 1, kUI = 2, kUS = 3 };

struct CyberParams {
  double lambda = 0.8;
  double q_rec_D = 0.5;
  double q_rec_U = 0.4;
  double v_H = 0.6;
  double q_inf_D = 0.3;
  double q_inf_U = 0.4;
  double beta_UU = 0.3;
  double beta_UD = 0.4;
  double beta_DU = 0.3;
  double beta_DD = 0.4;
  double k_D = 0.3;
  double k_I = 0.5;
  double dt = 0.1;
  /// Log-standard deviation of the lognormal infection-rate factor; 0 disables.
  double common_noise_std = 0.0;

  /// Throws InvalidParameter on negative rates, dt <= 0, or a dt for which
  /// I + dt*G fails to be column-stochastic at noise factor 1.
  void validate() const;
  /// Largest total out-rate of any column over all distributions and actions in [0,1].
  double worst_column_outflow() const;
};

using Matrix4 = std::array<std::array<double, 4>, 4>;

/// Rate matrix G with G[to][from]; columns sum to zero. `action` holds one
/// switching intensity in [0,1] per state (integer profiles are the corners).
/// Throws BadActionRange.
Matrix4 cyber_generator(const DistributionVector& mu, std::span<const double> action,
                        CommonNoiseSample noise, const CyberParams& params);

double cyber_reward(const DistributionVector& mu, const CyberParams& params);

/// Explicit Euler step mu + dt * G mu. Throws UnstableStep if a component
/// falls below -1e-12.
TransitionResult cyber_step(const DistributionVector& mu, std::span<const double> action,
                            CommonNoiseSample noise, const CyberParams& params);

class CyberEnv final : public Environment {
 public:
  explicit CyberEnv(CyberParams params);

  const CyberParams& params() const noexcept { return params_; }

  std::string_view name() const override { return "cyber"; }
  std::size_t state_dim() const override { return 4; }
  std::size_t action_count() const override { return 2; }
  TransitionResult step(const DistributionVector& mu, std::span<const double> action,
                        CommonNoiseSample noise) const override;
  double reward(const DistributionVector& mu, std::span<const double> action) const override;
  bool has_common_noise() const override { return params_.common_noise_std > 0.0; }
  CommonNoiseSample neutral_noise() const override { return {1.0}; }
  CommonNoiseSample sample_noise(Rng& rng) const override;
  double reward_bound() const override { return params_.k_D + params_.k_I; }

 private:
  CyberParams params_;
};

// ---------------------------------------------------------------------------
// Swarm motion on the unit torus, discretized on n_points nodes x_i = i / n.
// The state is a density histogram M (sum M_i h = 1), the action a velocity
// per node.

struct SwarmParams {
  std::size_t n_points = 128;
  /// Finite-difference time step.
  double dt = 2.0e-5;
  /// Finite-difference steps per environment step, action held fixed.
  std::size_t substeps = 1;
  double sigma = 1.0;
  double density_floor = 1e-10;
  double common_noise_std = 0.0;

  double cell_width() const noexcept { return 1.0 / static_cast<double>(n_points); }
  double node(std::size_t i) const noexcept { return static_cast<double>(i) * cell_width(); }
  /// Duration of one environment step.
  double step_duration() const noexcept { return dt * static_cast<double>(substeps); }
  void validate() const;
  /// Largest |velocity| accepted by the stability check.
  double max_stable_speed() const;
};

double swarm_phi(double x);

/// Analytic ergodic optimum 2 pi cos(2 pi x) and its stationary density
/// exp(2 sin 2 pi x), normalized on the grid.
double swarm_optimal_control(double x);
std::vector<double> swarm_optimal_control_profile(const SwarmParams& params);
DistributionVector swarm_stationary_density(const SwarmParams& params);

/// One conservative finite-difference step M + dt * (-div_upwind(v M) +
/// sigma^2/2 * lap M) with v = action + drift; no renormalization. Throws
/// CFLViolation when dt*max|v|/h > 1, dt*sigma^2/h^2 > 1/2, or
/// dt*(2 max|v|/h + sigma^2/h^2) > 1 (the positivity bound of the scheme).
std::vector<double> swarm_advance(std::span<const double> density, std::span<const double> action,
                                  double drift, const SwarmParams& params);

double swarm_reward(const DistributionVector& density, std::span<const double> action,
                    const SwarmParams& params);

/// `substeps` advances followed by renormalization. Throws CFLViolation,
/// NegativeDensity (component below -1e-12 after a step).
TransitionResult swarm_step(const DistributionVector& density, std::span<const double> action,
                            CommonNoiseSample noise, const SwarmParams& params);

class SwarmEnv final : public Environment {
 public:
  explicit SwarmEnv(SwarmParams params);

  const SwarmParams& params() const noexcept { return params_; }

  std::string_view name() const override { return "swarm"; }
  std::size_t state_dim() const override { return params_.n_points; }
  std::size_t action_count() const override { return 0; }
  TransitionResult step(const DistributionVector& mu, std::span<const double> action,
                        CommonNoiseSample noise) const override;
  double reward(const DistributionVector& mu, std::span<const double> action) const override;
  bool has_common_noise() const override { return params_.common_noise_std > 0.0; }
  CommonNoiseSample neutral_noise() const override { return {0.0}; }
  CommonNoiseSample sample_noise(Rng& rng) const override;

 private:
  SwarmParams params_;
};

// ---------------------------------------------------------------------------
// Two-state synthetic model with a logistic transition, small enough for
// exhaustive checks. Population mu = (p, 1 - p); an agent in state x playing
// action a lands in state 0 with probability
//   sigmoid(bias[x] + push * a + feedback * (p - 1/2) + e0),
// and the reward is -weight (p - target)^2 - cost * sum_x mu(x) a(x).

struct LogisticParams {
  std::array<double, 2> bias{0.5, -0.5};
  double push = 1.5;
  double feedback = 1.0;
  double target = 0.7;
  double weight = 1.0;
  double cost = 0.1;
  /// Standard deviation of the Gaussian logit shift; 0 disables.
  double common_noise_std = 0.0;

  void validate() const;
};

class LogisticEnv final : public Environment {
 public:
  explicit LogisticEnv(LogisticParams params);

  const LogisticParams& params() const noexcept { return params_; }

  std::string_view name() const override { return "logistic"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t action_count() const override { return 2; }
  TransitionResult step(const DistributionVector& mu, std::span<const double> action,
                        CommonNoiseSample noise) const override;
  double reward(const DistributionVector& mu, std::span<const double> action) const override;
  bool has_common_noise() const override { return params_.common_noise_std > 0.0; }
  CommonNoiseSample neutral_noise() const override { return {0.0}; }
  CommonNoiseSample sample_noise(Rng& rng) const override;
  double reward_bound() const override;

 private:
  LogisticParams params_;
};

}  // namespace mfc
