#include "mfc/dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mfc/error.hpp"

namespace mfc {
namespace {

void check_gamma(double gamma, bool allow_zero) {
  const bool ok = allow_zero ? (gamma >= 0.0 && gamma < 1.0) : (gamma > 0.0 && gamma < 1.0);
  if (!ok) fail(ErrorKind::InvalidParameter, "discount must lie in [0,1), got " + std::to_string(gamma));
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double continuation(const ProjectedModel& model, const std::vector<double>& v, std::size_t point,
                    std::size_t profile) {
  const auto& w = model.panel().weights;
  double c = 0.0;
  for (std::size_t e = 0; e < w.size(); ++e) c += w[e] * v[model.successor(point, profile, e)];
  return c;
}

double stop_threshold(double gamma, double tol) {
  return gamma == 0.0 ? std::numeric_limits<double>::infinity()
                      : tol * (1.0 - gamma) / (2.0 * gamma);
}

}  // namespace

NoisePanel NoisePanel::deterministic(const Environment& env) {
  return {{env.neutral_noise()}, {1.0}};
}

NoisePanel NoisePanel::sampled(const Environment& env, std::size_t n, Rng& rng) {
  if (!env.has_common_noise() || n == 0) return deterministic(env);
  NoisePanel panel;
  panel.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) panel.samples.push_back(env.sample_noise(rng));
  panel.weights.assign(n, 1.0 / static_cast<double>(n));
  return panel;
}

void NoisePanel::validate() const {
  if (samples.empty() || samples.size() != weights.size()) {
    fail(ErrorKind::InvalidParameter, "noise panel needs matching nonempty samples and weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail(ErrorKind::InvalidParameter, "noise panel weight is negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::InvalidParameter, "noise panel weights must sum to 1");
  for (const auto& s : samples) {
    if (!std::isfinite(s.value)) fail(ErrorKind::InvalidParameter, "noise sample not finite");
  }
}

ProjectedModel::ProjectedModel(const Environment& env, SimplexGrid grid, NoisePanel panel)
    : grid_(std::move(grid)), panel_(std::move(panel)), reward_bound_(env.reward_bound()) {
  if (env.action_count() == 0) {
    fail(ErrorKind::InvalidParameter, "projected model needs a finite action set");
  }
  if (grid_.dimension() != env.state_dim()) {
    fail(ErrorKind::DimensionMismatch, "grid dimension " + std::to_string(grid_.dimension()) +
                                           " vs env state dimension " +
                                           std::to_string(env.state_dim()));
  }
  panel_.validate();
  profiles_ = enumerate_action_profiles(env.state_dim(), env.action_count());

  const std::size_t np = profiles_.size();
  const std::size_t ne = panel_.size();
  rewards_.resize(grid_.size() * np);
  successors_.resize(grid_.size() * np * ne);
  std::vector<std::vector<double>> actions;
  actions.reserve(np);
  for (const auto& p : profiles_) actions.push_back(p.as_real());

  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const DistributionVector mu = grid_.point(i);
    for (std::size_t j = 0; j < np; ++j) {
      rewards_[i * np + j] = env.reward(mu, actions[j]);
      for (std::size_t e = 0; e < ne; ++e) {
        const TransitionResult t = env.step(mu, actions[j], panel_.samples[e]);
        successors_[(i * np + j) * ne + e] = project(t.next_state, grid_);
      }
    }
  }
}

ValueTable ExactQTable::row_max() const {
  ValueTable v;
  v.values.resize(num_points);
  for (std::size_t i = 0; i < num_points; ++i) {
    const auto r = row(i);
    v.values[i] = *std::max_element(r.begin(), r.end());
  }
  return v;
}

ValueTable bellman_T_a(const ValueTable& v, const GridPolicy& policy, const ProjectedModel& model,
                       double gamma) {
  check_gamma(gamma, true);
  if (v.size() != model.num_points() || policy.size() != model.num_points()) {
    fail(ErrorKind::DimensionMismatch, "value table / policy do not match the grid");
  }
  ValueTable out;
  out.values.resize(model.num_points());
  for (std::size_t i = 0; i < model.num_points(); ++i) {
    const std::size_t a = policy[i];
    if (a >= model.num_profiles()) fail(ErrorKind::BadActionRange, "policy profile index out of range");
    out.values[i] = model.reward(i, a) + gamma * continuation(model, v.values, i, a);
  }
  return out;
}

ValueTable bellman_T(const ValueTable& v, const ProjectedModel& model, double gamma) {
  check_gamma(gamma, true);
  if (v.size() != model.num_points()) fail(ErrorKind::DimensionMismatch, "value table size");
  ValueTable out;
  out.values.resize(model.num_points());
  for (std::size_t i = 0; i < model.num_points(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < model.num_profiles(); ++a) {
      best = std::max(best, model.reward(i, a) + gamma * continuation(model, v.values, i, a));
    }
    out.values[i] = best;
  }
  return out;
}

GridPolicy bellman_argmax(const ValueTable& v, const ProjectedModel& model, double gamma) {
  check_gamma(gamma, true);
  GridPolicy policy(model.num_points(), 0);
  for (std::size_t i = 0; i < model.num_points(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < model.num_profiles(); ++a) {
      const double q = model.reward(i, a) + gamma * continuation(model, v.values, i, a);
      if (q > best) {
        best = q;
        policy[i] = a;
      }
    }
  }
  return policy;
}

ValueTable value_iteration(const ProjectedModel& model, double gamma, double tol,
                           SolveStats* stats, std::size_t max_sweeps) {
  check_gamma(gamma, true);
  if (!(tol > 0.0)) fail(ErrorKind::InvalidParameter, "tolerance must be > 0");
  const double threshold = stop_threshold(gamma, tol);
  ValueTable v;
  v.values.assign(model.num_points(), 0.0);
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    ValueTable next = bellman_T(v, model, gamma);
    const double residual = sup_diff(next.values, v.values);
    v = std::move(next);
    if (residual <= threshold) {
      if (stats) *stats = {sweep, residual};
      return v;
    }
  }
  fail(ErrorKind::IterationCap, "value iteration did not converge in " + std::to_string(max_sweeps) + " sweeps");
}

ExactQTable exact_q(const ProjectedModel& model, double gamma, double tol, SolveStats* stats,
                    std::size_t max_sweeps) {
  check_gamma(gamma, true);
  if (!(tol > 0.0)) fail(ErrorKind::InvalidParameter, "tolerance must be > 0");
  const double threshold = stop_threshold(gamma, tol);
  const std::size_t np = model.num_profiles();
  ExactQTable q{model.num_points(), np, std::vector<double>(model.num_points() * np, 0.0)};
  std::vector<double> vmax(model.num_points(), 0.0);
  std::vector<double> next(q.values.size());
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < model.num_points(); ++i) {
      for (std::size_t a = 0; a < np; ++a) {
        next[i * np + a] = model.reward(i, a) + gamma * continuation(model, vmax, i, a);
      }
    }
    const double residual = sup_diff(next, q.values);
    q.values.swap(next);
    for (std::size_t i = 0; i < model.num_points(); ++i) {
      const auto r = q.row(i);
      vmax[i] = *std::max_element(r.begin(), r.end());
    }
    if (residual <= threshold) {
      if (stats) *stats = {sweep, residual};
      return q;
    }
  }
  fail(ErrorKind::IterationCap, "Q iteration did not converge in " + std::to_string(max_sweeps) + " sweeps");
}

PolicyEvaluation evaluate_policy(const Environment& env, const Policy& policy,
                                 const DistributionVector& mu0, double gamma, std::size_t horizon,
                                 std::size_t n_noise_rollouts, Rng& rng) {
  check_gamma(gamma, true);
  if (horizon == 0) fail(ErrorKind::InvalidParameter, "horizon must be >= 1");
  const std::size_t rollouts = env.has_common_noise() ? std::max<std::size_t>(n_noise_rollouts, 1) : 1;

  std::vector<double> returns;
  returns.reserve(rollouts);
  for (std::size_t r = 0; r < rollouts; ++r) {
    DistributionVector mu = mu0;
    double discount = 1.0;
    double total = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::vector<double> action = policy(mu);
      TransitionResult tr = env.sample_step(mu, action, rng);
      total += discount * tr.reward;
      discount *= gamma;
      mu = std::move(tr.next_state);
    }
    returns.push_back(total);
  }
  PolicyEvaluation out;
  out.rollouts = rollouts;
  out.mean = std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(rollouts);
  double var = 0.0;
  for (double x : returns) var += (x - out.mean) * (x - out.mean);
  out.stddev = rollouts > 1 ? std::sqrt(var / static_cast<double>(rollouts - 1)) : 0.0;
  const double cf = env.reward_bound();
  out.truncation_bound = std::isfinite(cf)
                             ? std::pow(gamma, static_cast<double>(horizon)) * cf / (1.0 - gamma)
                             : std::numeric_limits<double>::infinity();
  return out;
}

ValueTable evaluate_projected_policy(const ProjectedModel& model, const GridPolicy& policy,
                                     double gamma, std::size_t horizon) {
  ValueTable v;
  v.values.assign(model.num_points(), 0.0);
  for (std::size_t t = 0; t < horizon; ++t) v = bellman_T_a(v, policy, model, gamma);
  return v;
}

double Trajectory::mean_reward() const {
  if (rewards.empty()) return 0.0;
  return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
}

Trajectory rollout(const Environment& env, const Policy& policy, const DistributionVector& mu0,
                   std::size_t steps, Rng& rng) {
  Trajectory tr;
  tr.states.reserve(steps + 1);
  tr.states.push_back(mu0);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> action = policy(tr.states.back());
    TransitionResult r = env.sample_step(tr.states.back(), action, rng);
    tr.rewards.push_back(r.reward);
    tr.actions.push_back(std::move(action));
    tr.states.push_back(std::move(r.next_state));
  }
  return tr;
}

}  // namespace mfc
