#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mfc/dp_oracle.hpp"
#include "mfc/envs.hpp"
#include "mfc/neural.hpp"
#include "mfc/rng.hpp"

namespace mfc {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
};

/// Fixed-capacity ring of transitions; the oldest entry is evicted first.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim);

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return storage_.size(); }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;
  void clear() noexcept;

  void push(Transition t);
  /// `n` uniform draws with replacement, as positions for at(). Throws BufferTooSmall.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

 private:
  std::vector<Transition> storage_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

void buffer_push(ReplayBuffer& buffer, Transition t);
std::vector<Transition> buffer_sample(const ReplayBuffer& buffer, std::size_t n, Rng& rng);

/// Draws an initial distribution for each episode.
using InitialStateSampler = std::function<DistributionVector(Rng&)>;

/// Dirichlet(1, ..., 1) on the simplex.
InitialStateSampler uniform_simplex_sampler(std::size_t dimension);
/// Wrapped Gaussian bump with mean uniform in [0,1) and standard deviation
/// uniform in [std_min, std_max], as a density on the swarm grid.
InitialStateSampler gaussian_density_sampler(const SwarmParams& params, double std_min,
                                             double std_max);
DistributionVector wrapped_gaussian_density(const SwarmParams& params, double mean, double stddev);

struct DdpgConfig {
  std::size_t n_episodes = 3000;
  std::size_t episode_length = 200;
  std::size_t minibatch = 16;
  double tau = 0.01;
  double gamma = 0.9;
  double action_noise_std = 0.14142135623730951;  // variance 0.02
  double actor_learning_rate = 1e-4;
  double critic_learning_rate = 1e-4;
  std::size_t buffer_capacity = 100'000;
  bool buffer_reset_per_episode = true;
  std::vector<std::size_t> actor_hidden{64, 64};
  std::vector<std::size_t> critic_hidden{64, 64};
  /// Critic steps per training step; the actor and targets move on every
  /// `actor_delay`-th training step.
  std::size_t critic_steps = 1;
  std::size_t actor_delay = 1;
  /// The critic learns the return of reward * reward_scale.
  double reward_scale = 1.0;
  /// Init bound of both output layers.
  double last_layer_init = 3e-3;
  /// Box of applied actions. The actor works in [-1, 1]^d, mapped affinely
  /// onto the box; exploration noise and stored actions use those units.
  double action_low = -1.0;
  double action_high = 1.0;

  /// Throws InvalidParameter; enforces two hidden layers of width <= 300.
  void validate() const;
};

struct EpisodeLog {
  std::size_t episode = 0;
  double mean_return = 0.0;  // mean per-step reward of the episode
  double critic_loss = 0.0;  // mean over the episode's updates
  double actor_objective = 0.0;
  double wall_ms = 0.0;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

/// Forward evaluations per network, for auditing which networks feed the
/// critic targets.
struct NetworkCallCounts {
  std::size_t actor = 0;
  std::size_t critic = 0;
  std::size_t target_actor = 0;
  std::size_t target_critic = 0;
};

/// Actor, critic, their targets, optimizer state and replay buffer.
class DdpgTrainer {
 public:
  DdpgTrainer(std::size_t state_dim, std::size_t action_dim, DdpgConfig config, Rng& init_rng);

  const DdpgConfig& config() const noexcept { return config_; }
  const MLPParams& actor() const noexcept { return actor_; }
  const MLPParams& critic() const noexcept { return critic_; }
  const MLPParams& target_actor() const noexcept { return target_actor_; }
  const MLPParams& target_critic() const noexcept { return target_critic_; }
  MLPParams& mutable_critic() noexcept { return critic_; }
  ReplayBuffer& buffer() noexcept { return buffer_; }
  const ReplayBuffer& buffer() const noexcept { return buffer_; }
  const NetworkCallCounts& call_counts() const noexcept { return counts_; }
  void reset_call_counts() noexcept { counts_ = {}; }

  /// Deterministic action applied to the environment, inside the box.
  std::vector<double> act(std::span<const double> state);
  /// Normalized actor output plus Gaussian exploration noise, not clamped.
  std::vector<double> explore(std::span<const double> state, Rng& rng);
  /// Clamps a normalized action to [-1, 1] and maps it onto the box.
  std::vector<double> to_env_action(std::span<const double> normalized) const;

  /// y_i = c r_i + gamma Q'(s'_i, pi'(s'_i)) for the given buffer positions,
  /// c = reward_scale.
  Eigen::VectorXd critic_targets(std::span<const std::size_t> batch);
  /// One critic step on the squared TD error of `batch`.
  double update_critic(std::span<const std::size_t> batch);
  /// One actor ascent step on mean Q(s, pi(s)); returns that mean before the step.
  double update_actor(std::span<const std::size_t> batch);
  void update_targets();

  /// Samples minibatches for `critic_steps` critic updates, then on every
  /// `actor_delay`-th call an actor update and a target update.
  /// Returns nothing when the buffer holds fewer than `minibatch` entries.
  std::optional<UpdateStats> train_step(Rng& rng);

  /// Critic-only regression step used to fit Q on a frozen buffer.
  double fit_critic_step(Rng& rng);

 private:
  Eigen::MatrixXd gather_states(std::span<const std::size_t> batch, bool next) const;
  Eigen::MatrixXd gather_actions(std::span<const std::size_t> batch) const;
  Eigen::MatrixXd forward(const MLPParams& net, std::size_t& counter, const Eigen::MatrixXd& x);

  DdpgConfig config_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  MLPParams actor_;
  MLPParams critic_;
  MLPParams target_actor_;
  MLPParams target_critic_;
  AdamState actor_opt_;
  AdamState critic_opt_;
  ReplayBuffer buffer_;
  NetworkCallCounts counts_;
  std::size_t train_steps_ = 0;
};

struct DdpgResult {
  MLPParams actor;
  MLPParams critic;
  std::vector<EpisodeLog> log;
};

using DdpgObserver = std::function<void(const DdpgTrainer&, const EpisodeLog&)>;

/// Actor-critic training over distribution states: one fresh initial state
/// per episode, Gaussian exploration, one update per environment step.
/// Throws NonFiniteLoss if a loss or parameter becomes non-finite.
DdpgResult ddpg_train(const Environment& env, const DdpgConfig& config,
                      const InitialStateSampler& initial_state, Rng& rng,
                      const DdpgObserver& observer = {});

/// Policy view of an actor: normalized output clamped to [-1, 1] and mapped
/// onto [low, high].
Policy actor_policy(const MLPParams& actor, double low, double high);

/// Noise-free discounted return of the actor from mu0.
double evaluate_actor(const Environment& env, const MLPParams& actor, const DistributionVector& mu0,
                      double gamma, std::size_t horizon, double low, double high);

}  // namespace mfc
