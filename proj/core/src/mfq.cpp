#include "mfc/mfq.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <string>

#include "mfc/error.hpp"

namespace mfc {

double learning_rate(std::uint64_t visits, double kappa) {
  return std::pow(1.0 + static_cast<double>(visits), -kappa);
}

LearnedQTable::LearnedQTable(SimplexGrid g, std::vector<ActionProfile> p)
    : grid(std::move(g)), profiles(std::move(p)) {
  values.assign(grid.size() * profiles.size(), 0.0);
  visit_counts.assign(values.size(), 0);
}

void MfqConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorKind::InvalidParameter, "gamma must lie in [0,1)");
  if (!(kappa > 0.0)) fail(ErrorKind::InvalidParameter, "kappa must be > 0");
  if (n_episodes == 0) fail(ErrorKind::InvalidParameter, "n_episodes must be >= 1");
}

LearnedQTable mfq_train(const Environment& env, const SimplexGrid& grid, const MfqConfig& config,
                        Rng& rng, const MfqObserver& observer) {
  config.validate();
  if (!(config.kappa > 0.5 && config.kappa < 1.0)) {
    std::clog << "mfq: kappa = " << config.kappa
              << " is outside (1/2, 1); convergence guarantees do not apply\n";
  }
  if (env.action_count() == 0) fail(ErrorKind::InvalidParameter, "MFQ needs a finite action set");
  if (grid.dimension() != env.state_dim()) fail(ErrorKind::DimensionMismatch, "grid vs env dimension");

  LearnedQTable q(grid, enumerate_action_profiles(env.state_dim(), env.action_count()));
  const std::size_t np = q.num_profiles();
  const std::size_t pairs = q.values.size();

  std::vector<DistributionVector> points;
  points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) points.push_back(grid.point(i));
  std::vector<std::vector<double>> actions;
  for (const auto& p : q.profiles) actions.push_back(p.as_real());

  std::vector<std::size_t> order(pairs);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> snapshot;
  std::vector<double> snapshot_max(grid.size());

  auto row_max = [np](const std::vector<double>& table, std::size_t point) {
    const auto first = table.begin() + static_cast<std::ptrdiff_t>(point * np);
    return *std::max_element(first, first + static_cast<std::ptrdiff_t>(np));
  };

  for (std::size_t t = 0; t < config.n_episodes; ++t) {
    // Q_{t+1} <- Q_t; reads below use the snapshot Q_t.
    if (!config.in_place) {
      snapshot = q.values;
      for (std::size_t i = 0; i < grid.size(); ++i) snapshot_max[i] = row_max(snapshot, i);
    }
    if (config.sweep_order == SweepOrder::Shuffled) std::shuffle(order.begin(), order.end(), rng);

    double td_total = 0.0;
    for (std::size_t pair : order) {
      const std::size_t point = pair / np;
      const std::size_t profile = pair % np;
      const TransitionResult tr = env.sample_step(points[point], actions[profile], rng);
      const std::size_t next = project(tr.next_state, grid);

      const double current = config.in_place ? q.values[pair] : snapshot[pair];
      const double best_next = config.in_place ? row_max(q.values, next) : snapshot_max[next];
      const double target = tr.reward + config.gamma * best_next;
      const double alpha = learning_rate(q.visit_counts[pair], config.kappa);
      q.values[pair] = (1.0 - alpha) * current + alpha * target;
      ++q.visit_counts[pair];
      td_total += std::abs(target - current);
    }
    q.episode = t + 1;
    if (observer) observer(q, {t + 1, td_total / static_cast<double>(pairs)});
  }
  return q;
}

GridPolicy greedy_policy(std::span<const double> values, std::size_t num_points,
                         std::size_t num_profiles) {
  if (values.size() != num_points * num_profiles) fail(ErrorKind::DimensionMismatch, "table size");
  GridPolicy policy(num_points, 0);
  for (std::size_t i = 0; i < num_points; ++i) {
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(i * num_profiles);
    // max_element returns the first maximum.
    policy[i] = static_cast<std::size_t>(
        std::max_element(first, first + static_cast<std::ptrdiff_t>(num_profiles)) - first);
  }
  return policy;
}

GridPolicy greedy_policy(const LearnedQTable& q) {
  return greedy_policy(q.values, q.num_points(), q.num_profiles());
}

double sup_error(const LearnedQTable& learned, const ExactQTable& exact) {
  if (learned.num_points() != exact.num_points || learned.num_profiles() != exact.num_profiles) {
    fail(ErrorKind::GridMismatch, "learned and exact tables have different shapes");
  }
  double m = 0.0;
  for (std::size_t k = 0; k < learned.values.size(); ++k) {
    m = std::max(m, std::abs(learned.values[k] - exact.values[k]));
  }
  return m;
}

}  // namespace mfc
