#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mfc/dp_oracle.hpp"
#include "mfc/envs.hpp"
#include "mfc/rng.hpp"
#include "mfc/simplex.hpp"

namespace mfc {

/// Polynomial step size (1 + n)^-kappa.
double learning_rate(std::uint64_t visits, double kappa);

/// Q table learned on grid x profiles with per-entry visit counts.
struct LearnedQTable {
  SimplexGrid grid;
  std::vector<ActionProfile> profiles;
  std::vector<double> values;               // row-major |grid| x |profiles|
  std::vector<std::uint64_t> visit_counts;  // same layout
  std::size_t episode = 0;

  LearnedQTable(SimplexGrid g, std::vector<ActionProfile> p);

  std::size_t num_points() const noexcept { return grid.size(); }
  std::size_t num_profiles() const noexcept { return profiles.size(); }
  double at(std::size_t point, std::size_t profile) const {
    return values[point * profiles.size() + profile];
  }
  std::span<const double> row(std::size_t point) const {
    return {values.data() + point * profiles.size(), profiles.size()};
  }
};

enum class SweepOrder { Lexicographic, Shuffled };

struct MfqConfig {
  double gamma = 0.5;
  double kappa = 0.7;
  std::size_t n_episodes = 1000;
  SweepOrder sweep_order = SweepOrder::Lexicographic;
  /// Gauss-Seidel variant: updates read the table being written instead of
  /// the episode-start snapshot.
  bool in_place = false;

  void validate() const;
};

struct MfqEpisodeStats {
  std::size_t episode = 0;  // 1-based count of completed episodes
  double mean_td_magnitude = 0.0;
};

using MfqObserver = std::function<void(const LearnedQTable&, const MfqEpisodeStats&)>;

/// Tabular mean-field Q-learning with a full sweep of grid x profiles per
/// episode; every transition is the env step (fresh common noise) followed by
/// projection on the grid.
LearnedQTable mfq_train(const Environment& env, const SimplexGrid& grid, const MfqConfig& config,
                        Rng& rng, const MfqObserver& observer = {});

/// Argmax profile per grid point; ties go to the smallest profile index.
GridPolicy greedy_policy(std::span<const double> values, std::size_t num_points,
                         std::size_t num_profiles);
GridPolicy greedy_policy(const LearnedQTable& q);

/// Sup-norm distance between a learned and an exact table on the same layout.
double sup_error(const LearnedQTable& learned, const ExactQTable& exact);

}  // namespace mfc
