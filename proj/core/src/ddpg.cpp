#include "mfc/ddpg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "mfc/error.hpp"

namespace mfc {

// ----------------------------------------------------------------- buffer ---

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
    : storage_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity == 0) fail(ErrorKind::InvalidParameter, "replay buffer capacity must be >= 1");
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) fail(ErrorKind::DimensionMismatch, "replay buffer index out of range");
  const std::size_t oldest = (head_ + storage_.size() - size_) % storage_.size();
  return storage_[(oldest + i) % storage_.size()];
}

void ReplayBuffer::clear() noexcept {
  head_ = 0;
  size_ = 0;
}

void ReplayBuffer::push(Transition t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ ||
      t.action.size() != action_dim_) {
    fail(ErrorKind::DimensionMismatch, "transition does not match buffer dimensions");
  }
  storage_[head_] = std::move(t);
  head_ = (head_ + 1) % storage_.size();
  size_ = std::min(size_ + 1, storage_.size());
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (size_ < n || size_ == 0) {
    fail(ErrorKind::BufferTooSmall,
         "need " + std::to_string(n) + " transitions, buffer holds " + std::to_string(size_));
  }
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

void buffer_push(ReplayBuffer& buffer, Transition t) { buffer.push(std::move(t)); }

std::vector<Transition> buffer_sample(const ReplayBuffer& buffer, std::size_t n, Rng& rng) {
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i : buffer.sample_indices(n, rng)) out.push_back(buffer.at(i));
  return out;
}

// --------------------------------------------------------------- samplers ---

InitialStateSampler uniform_simplex_sampler(std::size_t dimension) {
  return [dimension](Rng& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(dimension);
    double total = 0.0;
    for (double& x : w) total += (x = e(rng));
    for (double& x : w) x /= total;
    return new_distribution(w, false);
  };
}

DistributionVector wrapped_gaussian_density(const SwarmParams& params, double mean, double stddev) {
  std::vector<double> m(params.n_points, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (int image = -3; image <= 3; ++image) {
      const double d = params.node(i) - mean + image;
      m[i] += std::exp(-d * d / (2.0 * stddev * stddev));
    }
  }
  return new_density(m, params.cell_width(), false);
}

InitialStateSampler gaussian_density_sampler(const SwarmParams& params, double std_min,
                                             double std_max) {
  if (!(std_min > 0.0 && std_max >= std_min)) {
    fail(ErrorKind::InvalidParameter, "need 0 < std_min <= std_max");
  }
  return [params, std_min, std_max](Rng& rng) {
    std::uniform_real_distribution<double> mean(0.0, 1.0);
    std::uniform_real_distribution<double> spread(std_min, std_max);
    const double m = mean(rng);
    const double s = spread(rng);
    return wrapped_gaussian_density(params, m, s);
  };
}

// ----------------------------------------------------------------- config ---

void DdpgConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::InvalidParameter, what);
  };
  require(n_episodes >= 1 && episode_length >= 1, "ddpg needs episodes and steps");
  require(minibatch >= 1, "minibatch must be >= 1");
  require(critic_steps >= 1 && actor_delay >= 1, "critic steps and actor delay must be >= 1");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0,1]");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0,1)");
  require(action_noise_std >= 0.0, "action noise std must be >= 0");
  require(actor_learning_rate > 0.0 && critic_learning_rate > 0.0, "learning rates must be > 0");
  require(buffer_capacity >= minibatch, "buffer capacity must be >= minibatch");
  require(action_high > action_low, "action box is empty");
  require(reward_scale > 0.0, "reward scale must be > 0");
  require(last_layer_init >= 0.0, "last layer init bound must be >= 0");
  for (const auto* hidden : {&actor_hidden, &critic_hidden}) {
    require(hidden->size() == 2, "networks use exactly two hidden layers");
    for (std::size_t w : *hidden) require(w >= 1 && w <= 300, "hidden width must lie in [1, 300]");
  }
}

// ---------------------------------------------------------------- trainer ---

DdpgTrainer::DdpgTrainer(std::size_t state_dim, std::size_t action_dim, DdpgConfig config,
                         Rng& init_rng)
    : config_(std::move(config)),
      state_dim_(state_dim),
      action_dim_(action_dim),
      buffer_(config_.buffer_capacity, state_dim, action_dim) {
  config_.validate();
  MLPSpec actor_spec;
  actor_spec.widths = {state_dim, config_.actor_hidden[0], config_.actor_hidden[1], action_dim};
  actor_spec.output = OutputActivation::ScaledTanh;
  actor_spec.last_layer_init = config_.last_layer_init;
  MLPSpec critic_spec;
  critic_spec.widths = {state_dim + action_dim, config_.critic_hidden[0], config_.critic_hidden[1], 1};
  critic_spec.last_layer_init = config_.last_layer_init;

  actor_ = make_mlp(actor_spec, init_rng);
  critic_ = make_mlp(critic_spec, init_rng);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = make_adam(actor_, config_.actor_learning_rate);
  critic_opt_ = make_adam(critic_, config_.critic_learning_rate);
}

Eigen::MatrixXd DdpgTrainer::forward(const MLPParams& net, std::size_t& counter,
                                     const Eigen::MatrixXd& x) {
  ++counter;
  return mlp_forward_batch(net, x);
}

namespace {

std::vector<double> map_to_box(std::span<const double> normalized, double low, double high) {
  const double mid = 0.5 * (high + low);
  const double half = 0.5 * (high - low);
  std::vector<double> out(normalized.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mid + half * std::clamp(normalized[i], -1.0, 1.0);
  return out;
}

}  // namespace

std::vector<double> DdpgTrainer::to_env_action(std::span<const double> normalized) const {
  return map_to_box(normalized, config_.action_low, config_.action_high);
}

std::vector<double> DdpgTrainer::act(std::span<const double> state) {
  const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
  const Eigen::MatrixXd u = forward(actor_, counts_.actor, s);
  return to_env_action(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())));
}

std::vector<double> DdpgTrainer::explore(std::span<const double> state, Rng& rng) {
  const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
  const Eigen::MatrixXd u = forward(actor_, counts_.actor, s);
  std::vector<double> a(u.data(), u.data() + u.size());
  if (config_.action_noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, config_.action_noise_std);
    for (double& x : a) x += noise(rng);
  }
  return a;
}

Eigen::MatrixXd DdpgTrainer::gather_states(std::span<const std::size_t> batch, bool next) const {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(state_dim_), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Transition& t = buffer_.at(batch[k]);
    const auto& v = next ? t.next_state : t.state;
    s.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return s;
}

Eigen::MatrixXd DdpgTrainer::gather_actions(std::span<const std::size_t> batch) const {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(action_dim_), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& v = buffer_.at(batch[k]).action;
    a.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return a;
}

Eigen::VectorXd DdpgTrainer::critic_targets(std::span<const std::size_t> batch) {
  const Eigen::MatrixXd next = gather_states(batch, true);
  const Eigen::MatrixXd next_action = forward(target_actor_, counts_.target_actor, next);
  Eigen::MatrixXd input(next.rows() + next_action.rows(), next.cols());
  input << next, next_action;
  const Eigen::MatrixXd q_next = forward(target_critic_, counts_.target_critic, input);
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    y(static_cast<Eigen::Index>(k)) =
        config_.reward_scale * buffer_.at(batch[k]).reward + config_.gamma * q_next(0, static_cast<Eigen::Index>(k));
  }
  return y;
}

double DdpgTrainer::update_critic(std::span<const std::size_t> batch) {
  const Eigen::VectorXd y = critic_targets(batch);
  const Eigen::MatrixXd s = gather_states(batch, false);
  const Eigen::MatrixXd a = gather_actions(batch);
  Eigen::MatrixXd input(s.rows() + a.rows(), s.cols());
  input << s, a;
  const Eigen::MatrixXd q = forward(critic_, counts_.critic, input);
  const double n = static_cast<double>(batch.size());
  const Eigen::RowVectorXd diff = q.row(0) - y.transpose();
  const double loss = diff.squaredNorm() / n;
  if (!std::isfinite(loss)) fail(ErrorKind::NonFiniteLoss, "critic loss is not finite");
  const Eigen::MatrixXd upstream = (2.0 / n) * diff;
  ++counts_.critic;
  const MLPGradients g = mlp_backward_batch(critic_, input, upstream);
  adam_update(critic_, g, critic_opt_);
  return loss;
}

double DdpgTrainer::update_actor(std::span<const std::size_t> batch) {
  const Eigen::MatrixXd s = gather_states(batch, false);
  const Eigen::MatrixXd a = forward(actor_, counts_.actor, s);
  Eigen::MatrixXd input(s.rows() + a.rows(), s.cols());
  input << s, a;
  const Eigen::MatrixXd q = forward(critic_, counts_.critic, input);
  const double n = static_cast<double>(batch.size());
  const double objective = q.sum() / n;

  // dQ/da through the critic's input gradient, then the chain rule into the
  // actor; ascent is descent on -objective.
  ++counts_.critic;
  const MLPGradients gc =
      mlp_backward_batch(critic_, input, Eigen::MatrixXd::Constant(1, s.cols(), 1.0 / n));
  const Eigen::MatrixXd dq_da = gc.input.bottomRows(static_cast<Eigen::Index>(action_dim_));
  ++counts_.actor;
  const MLPGradients ga = mlp_backward_batch(actor_, s, -dq_da);
  adam_update(actor_, ga, actor_opt_);
  return objective;
}

void DdpgTrainer::update_targets() {
  soft_update(target_critic_, critic_, config_.tau);
  soft_update(target_actor_, actor_, config_.tau);
}

std::optional<UpdateStats> DdpgTrainer::train_step(Rng& rng) {
  if (buffer_.size() < config_.minibatch) return std::nullopt;
  UpdateStats stats;
  std::vector<std::size_t> batch;
  for (std::size_t k = 0; k < config_.critic_steps; ++k) {
    batch = buffer_.sample_indices(config_.minibatch, rng);
    stats.critic_loss += update_critic(batch) / static_cast<double>(config_.critic_steps);
  }
  if (++train_steps_ % config_.actor_delay == 0) {
    stats.actor_objective = update_actor(batch);
    update_targets();
  }
  return stats;
}

double DdpgTrainer::fit_critic_step(Rng& rng) {
  const std::vector<std::size_t> batch = buffer_.sample_indices(config_.minibatch, rng);
  return update_critic(batch);
}

// --------------------------------------------------------------- training ---

DdpgResult ddpg_train(const Environment& env, const DdpgConfig& config,
                      const InitialStateSampler& initial_state, Rng& rng,
                      const DdpgObserver& observer) {
  config.validate();
  const std::size_t dim = env.state_dim();
  DdpgTrainer trainer(dim, dim, config, rng);

  DdpgResult result;
  result.log.reserve(config.n_episodes);
  for (std::size_t episode = 0; episode < config.n_episodes; ++episode) {
    const auto start = std::chrono::steady_clock::now();
    DistributionVector mu = initial_state(rng);
    if (mu.dimension() != dim) fail(ErrorKind::DimensionMismatch, "initial state dimension");
    if (config.buffer_reset_per_episode) trainer.buffer().clear();

    EpisodeLog entry;
    entry.episode = episode + 1;
    std::size_t updates = 0;
    double reward_total = 0.0;
    for (std::size_t t = 0; t < config.episode_length; ++t) {
      std::vector<double> raw = trainer.explore(mu.weights(), rng);
      const std::vector<double> applied = trainer.to_env_action(raw);
      TransitionResult tr = env.sample_step(mu, applied, rng);
      reward_total += tr.reward;
      trainer.buffer().push({std::vector<double>(mu.weights().begin(), mu.weights().end()),
                             std::move(raw), tr.reward,
                             std::vector<double>(tr.next_state.weights().begin(),
                                                 tr.next_state.weights().end())});
      if (auto stats = trainer.train_step(rng)) {
        entry.critic_loss += stats->critic_loss;
        entry.actor_objective += stats->actor_objective;
        ++updates;
      }
      mu = std::move(tr.next_state);
    }
    if (!trainer.actor().all_finite() || !trainer.critic().all_finite()) {
      fail(ErrorKind::NonFiniteLoss,
           "network parameters diverged in episode " + std::to_string(episode + 1));
    }
    entry.mean_return = reward_total / static_cast<double>(config.episode_length);
    if (updates > 0) {
      entry.critic_loss /= static_cast<double>(updates);
      entry.actor_objective /= static_cast<double>(updates);
    }
    entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(entry);
    if (observer) observer(trainer, entry);
  }
  result.actor = trainer.actor();
  result.critic = trainer.critic();
  return result;
}

Policy actor_policy(const MLPParams& actor, double low, double high) {
  return [actor, low, high](const DistributionVector& mu) {
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(mu.weights().data(), static_cast<Eigen::Index>(mu.dimension()));
    const Eigen::VectorXd u = mlp_forward(actor, s);
    return map_to_box(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())), low, high);
  };
}

double evaluate_actor(const Environment& env, const MLPParams& actor, const DistributionVector& mu0,
                      double gamma, std::size_t horizon, double low, double high) {
  Rng unused(0);
  return evaluate_policy(env, actor_policy(actor, low, high), mu0, gamma, horizon, 1, unused).mean;
}

}  // namespace mfc
