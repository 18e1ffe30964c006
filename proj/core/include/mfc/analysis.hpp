#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mfc/ddpg.hpp"
#include "mfc/dp_oracle.hpp"
#include "mfc/envs.hpp"
#include "mfc/mfq.hpp"
#include "mfc/simplex.hpp"

namespace mfc {

inline constexpr double kArgmaxTolerance = 1e-12;

/// exp(tau x) / sum exp(tau x), with the max subtracted first.
std::vector<double> softmax_tau(std::span<const double> x, double tau);
/// Uniform distribution over the maximizers of x (tolerance 1e-12).
std::vector<double> argmaxe(std::span<const double> x);

struct BoundInputs {
  double epsilon = 0.01;
  double gamma = 0.5;
  double lipschitz_value = 1.0;       // L_V
  double lipschitz_transition = 1.0;  // L_Phi
  double lipschitz_reward = 1.0;      // L_f
  double grid_fineness = 0.1;         // eps_S
  double covering_time = 1.0;
  double kappa = 0.7;
  double delta = 0.1;
  double value_max = 1.0;
  double action_gap = 1.0;
  std::size_t grid_size = 1;
  std::size_t profile_count = 1;

  /// Throws InvalidParameter. epsilon, grid_fineness and the Lipschitz
  /// constants may be zero; everything else must be positive, with gamma in
  /// (0,1), kappa in (1/2,1) and delta in (0,1).
  void validate() const;
};

/// eps + [gamma (2 - gamma) / (1 - gamma) L_V (1 + L_Phi) + L_f] eps_S.
double theorem_error(const BoundInputs& in);

/// Terms of the episode-count order bound with its constant set to 1. This is
/// an order of magnitude, not a sharp count.
struct EpisodeOrder {
  double covering_time_delta = 0.0;  // ceil(T_cov log2(1 / (2 delta))), at least 1
  double beta = 0.0;                 // (1 - gamma) / 2
  double first_term = 0.0;
  double second_term = 0.0;
  double total = 0.0;
};

/// Requires epsilon > 0. Logarithms below zero are clamped to zero.
EpisodeOrder nepi_order_terms(const BoundInputs& in);
double nepi_order(const BoundInputs& in);

/// tau eps' + 2 |A| exp(-tau K_A).
double corollary_bound(double tau, double eps_prime, std::size_t action_count, double gap);
/// Minimizer of corollary_bound over tau > 0 by golden-section search.
double corollary_optimal_tau(double eps_prime, std::size_t action_count, double gap,
                             double tol = 1e-8);

/// Min over rows of (max - second distinct max); +inf if every row is constant.
double action_gap(const ExactQTable& exact);

struct CorollaryReport {
  double tau = 0.0;
  double max_distance = 0.0;  // max over points of |softmax(learned) - argmaxe(exact)|_2
  std::size_t worst_point = 0;
  double eps_prime = 0.0;     // measured sup error
  double action_gap = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Throws GridMismatch.
CorollaryReport empirical_corollary_check(const LearnedQTable& learned, const ExactQTable& exact,
                                          double tau);

// ------------------------------------------------------------ swarm metrics

/// sqrt(h sum mu*_i (control_i - a*_i)^2).
double swarm_control_error(std::span<const double> control, const SwarmParams& params);
/// sqrt(h sum (M_i - M*_i)^2).
double swarm_density_error(const DistributionVector& density, const SwarmParams& params);
/// sqrt(h sum (Phi(M*, a*) - M*)_i^2) / dt for one finite-difference step.
double swarm_stationarity_residual(const SwarmParams& params);
/// Density error after each of `steps` environment steps under `policy`.
std::vector<double> swarm_density_error_trace(const Policy& policy, const SwarmParams& params,
                                              const DistributionVector& start, std::size_t steps);

struct SwarmMetrics {
  double control_error = 0.0;
  double density_error = 0.0;
  double stationarity_residual = 0.0;
  std::size_t rollout_steps = 0;
};

SwarmMetrics swarm_metrics(const Policy& actor, const SwarmParams& params,
                           const DistributionVector& start, std::size_t rollout_steps = 500);
/// Same, starting from a random wrapped Gaussian (std in [0.05, 0.2]).
SwarmMetrics swarm_metrics(const Policy& actor, const SwarmParams& params, Rng& rng,
                           std::size_t rollout_steps = 500);

// --------------------------------------------------------- Lipschitz probe

using ActionSampler = std::function<std::vector<double>(Rng&)>;

/// Uniformly random action profile of a finite-action env.
ActionSampler profile_sampler(const Environment& env);
/// Uniformly random grid point.
InitialStateSampler grid_sampler(const SimplexGrid& grid);

struct LipschitzEstimate {
  double transition = 0.0;  // max |E Phi(mu) - E Phi(nu)| / |mu - nu|
  double reward = 0.0;      // max |f(mu) - f(nu)| / |mu - nu|
  std::size_t pairs = 0;
};

/// Empirical lower bounds on the Lipschitz constants in mu, with the noise
/// averaged over `panel`. Pair k is drawn from its own stream derived from
/// `seed`, so a larger n_pairs extends the same sample.
LipschitzEstimate lipschitz_probe(const Environment& env, const InitialStateSampler& states,
                                  const ActionSampler& actions, const NoisePanel& panel,
                                  std::size_t n_pairs, std::uint64_t seed);

// ------------------------------------------------------- grid refinement

/// max over eval points x and profiles a of |Qa(Proj_a x, a) - Qb(Proj_b x, a)|.
double projected_q_distance(const ExactQTable& qa, const SimplexGrid& grid_a,
                            const ExactQTable& qb, const SimplexGrid& grid_b,
                            const SimplexGrid& eval);

struct RefinementRow {
  std::size_t resolution = 0;
  double error_vs_reference = 0.0;     // against the last resolution
  double successive_difference = 0.0;  // against the next resolution; 0 for the last
};

/// Exact Q tables at each resolution, compared through projection on `eval`.
std::vector<RefinementRow> grid_refinement(const Environment& env,
                                           std::span<const std::size_t> resolutions, double gamma,
                                           double tol, const NoisePanel& panel,
                                           const SimplexGrid& eval);

}  // namespace mfc
