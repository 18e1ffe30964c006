#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "mfc/envs.hpp"
#include "mfc/rng.hpp"
#include "mfc/simplex.hpp"

namespace mfc {

/// Fixed quadrature for the expectation over the common noise.
struct NoisePanel {
  std::vector<CommonNoiseSample> samples;
  std::vector<double> weights;

  /// The single neutral sample with weight one.
  static NoisePanel deterministic(const Environment& env);
  /// `n` equally weighted draws (the neutral sample when the env is noise free).
  static NoisePanel sampled(const Environment& env, std::size_t n, Rng& rng);

  std::size_t size() const noexcept { return samples.size(); }
  void validate() const;
};

/// The projected MDP on grid x profiles: reward and projected successor for
/// every (grid point, action profile, noise sample), computed once.
class ProjectedModel {
 public:
  ProjectedModel(const Environment& env, SimplexGrid grid, NoisePanel panel);

  const SimplexGrid& grid() const noexcept { return grid_; }
  const std::vector<ActionProfile>& profiles() const noexcept { return profiles_; }
  const NoisePanel& panel() const noexcept { return panel_; }
  std::size_t num_points() const noexcept { return grid_.size(); }
  std::size_t num_profiles() const noexcept { return profiles_.size(); }
  double reward_bound() const noexcept { return reward_bound_; }

  double reward(std::size_t point, std::size_t profile) const {
    return rewards_[point * profiles_.size() + profile];
  }
  std::size_t successor(std::size_t point, std::size_t profile, std::size_t noise) const {
    return successors_[(point * profiles_.size() + profile) * panel_.size() + noise];
  }

 private:
  SimplexGrid grid_;
  std::vector<ActionProfile> profiles_;
  NoisePanel panel_;
  double reward_bound_;
  std::vector<double> rewards_;
  std::vector<std::size_t> successors_;
};

struct ValueTable {
  std::vector<double> values;  // one per grid point

  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Q values, row-major |grid| x |profiles|.
struct ExactQTable {
  std::size_t num_points = 0;
  std::size_t num_profiles = 0;
  std::vector<double> values;

  double at(std::size_t point, std::size_t profile) const {
    return values[point * num_profiles + profile];
  }
  std::span<const double> row(std::size_t point) const {
    return {values.data() + point * num_profiles, num_profiles};
  }
  ValueTable row_max() const;
};

/// Profile index chosen at every grid point.
using GridPolicy = std::vector<std::size_t>;

struct SolveStats {
  std::size_t sweeps = 0;
  double final_residual = 0.0;
};

ValueTable bellman_T_a(const ValueTable& v, const GridPolicy& policy, const ProjectedModel& model,
                       double gamma);
ValueTable bellman_T(const ValueTable& v, const ProjectedModel& model, double gamma);
/// Greedy profile of T at every point; ties go to the smallest profile index.
GridPolicy bellman_argmax(const ValueTable& v, const ProjectedModel& model, double gamma);

inline constexpr std::size_t kDefaultSweepCap = 1'000'000;

/// Iterates T from zero until successive iterates differ by at most
/// tol (1 - gamma) / (2 gamma) in sup norm, so the result is within tol / 2
/// of the fixed point. Throws IterationCap.
ValueTable value_iteration(const ProjectedModel& model, double gamma, double tol,
                           SolveStats* stats = nullptr, std::size_t max_sweeps = kDefaultSweepCap);

/// Same stopping rule for the Q-Bellman operator.
ExactQTable exact_q(const ProjectedModel& model, double gamma, double tol,
                    SolveStats* stats = nullptr, std::size_t max_sweeps = kDefaultSweepCap);

/// Maps a distribution to the real-valued action applied to it.
using Policy = std::function<std::vector<double>(const DistributionVector&)>;

struct PolicyEvaluation {
  double mean = 0.0;
  double stddev = 0.0;
  /// gamma^horizon C_f / (1 - gamma); +inf for unbounded rewards.
  double truncation_bound = 0.0;
  std::size_t rollouts = 0;
};

/// Monte-Carlo discounted return over the unprojected dynamics, one fresh
/// common-noise path per rollout (a single rollout when the env is noise free).
PolicyEvaluation evaluate_policy(const Environment& env, const Policy& policy,
                                 const DistributionVector& mu0, double gamma, std::size_t horizon,
                                 std::size_t n_noise_rollouts, Rng& rng);

/// Expected discounted return of a grid policy over `horizon` steps of the
/// projected dynamics, noise averaged with the model's panel.
ValueTable evaluate_projected_policy(const ProjectedModel& model, const GridPolicy& policy,
                                     double gamma, std::size_t horizon);


struct Trajectory {
  std::vector<DistributionVector> states;  // horizon + 1 entries
  std::vector<std::vector<double>> actions;
  std::vector<double> rewards;

  double mean_reward() const;
};

/// Runs `policy` for `steps` transitions of the unprojected dynamics.
Trajectory rollout(const Environment& env, const Policy& policy, const DistributionVector& mu0,
                   std::size_t steps, Rng& rng);

}  // namespace mfc
