#include "mfc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfc/error.hpp"

namespace mfc {

namespace {

void require_nonempty_finite(std::span<const double> x, const char* what) {
  if (x.empty()) fail(ErrorKind::InvalidParameter, std::string(what) + ": empty input");
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidParameter, std::string(what) + ": non-finite input");
  }
}

double h_weighted_l2(std::span<const double> a, std::span<const double> b, double h) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(h * s);
}

}  // namespace

std::vector<double> softmax_tau(std::span<const double> x, double tau) {
  require_nonempty_finite(x, "softmax");
  if (!(tau > 0.0)) fail(ErrorKind::InvalidParameter, "softmax temperature must be > 0");
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (out[i] = std::exp(tau * (x[i] - m)));
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> argmaxe(std::span<const double> x) {
  require_nonempty_finite(x, "argmaxe");
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= m - kArgmaxTolerance) {
      out[i] = 1.0;
      ++count;
    }
  }
  for (double& v : out) v /= static_cast<double>(count);
  return out;
}

void BoundInputs::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::InvalidParameter, what);
  };
  require(epsilon >= 0.0 && grid_fineness >= 0.0, "epsilon and grid fineness must be >= 0");
  require(lipschitz_value >= 0.0 && lipschitz_transition >= 0.0 && lipschitz_reward >= 0.0,
          "Lipschitz constants must be >= 0");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0,1)");
  require(kappa > 0.5 && kappa < 1.0, "kappa must lie in (1/2,1)");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  require(covering_time > 0.0 && value_max > 0.0 && action_gap > 0.0,
          "covering time, value bound and action gap must be > 0");
  require(grid_size >= 1 && profile_count >= 1, "cardinalities must be >= 1");
}

double theorem_error(const BoundInputs& in) {
  in.validate();
  const double g = in.gamma;
  return in.epsilon + (g * (2.0 - g) / (1.0 - g) * in.lipschitz_value *
                           (1.0 + in.lipschitz_transition) +
                       in.lipschitz_reward) *
                          in.grid_fineness;
}

EpisodeOrder nepi_order_terms(const BoundInputs& in) {
  in.validate();
  if (!(in.epsilon > 0.0)) fail(ErrorKind::InvalidParameter, "episode order needs epsilon > 0");
  EpisodeOrder o;
  o.beta = (1.0 - in.gamma) / 2.0;
  o.covering_time_delta =
      std::max(1.0, std::ceil(in.covering_time * std::log2(1.0 / (2.0 * in.delta))));
  const double t = o.covering_time_delta;
  const double v = in.value_max;
  const double card = static_cast<double>(in.grid_size) * static_cast<double>(in.profile_count);
  const double log_first =
      std::max(0.0, std::log(card * v / (2.0 * in.delta * o.beta * in.epsilon)));
  o.first_term = std::pow(std::pow(t, 1.0 + 3.0 * in.kappa) * v * v * log_first /
                              (o.beta * o.beta * in.epsilon * in.epsilon),
                          1.0 / in.kappa);
  const double log_second = std::max(0.0, std::log(v / in.epsilon));
  o.second_term = std::pow(t / o.beta * log_second, 1.0 / (1.0 - in.kappa));
  o.total = o.first_term + o.second_term;
  return o;
}

double nepi_order(const BoundInputs& in) { return nepi_order_terms(in).total; }

double corollary_bound(double tau, double eps_prime, std::size_t action_count, double gap) {
  if (!(tau > 0.0) || eps_prime < 0.0 || action_count == 0 || !(gap > 0.0)) {
    fail(ErrorKind::InvalidParameter, "corollary bound needs tau, |A|, K_A > 0 and eps' >= 0");
  }
  if (std::isinf(gap)) return tau * eps_prime;
  return tau * eps_prime + 2.0 * static_cast<double>(action_count) * std::exp(-tau * gap);
}

double corollary_optimal_tau(double eps_prime, std::size_t action_count, double gap, double tol) {
  if (!(eps_prime > 0.0) || action_count == 0 || !(gap > 0.0) || std::isinf(gap)) {
    fail(ErrorKind::InvalidParameter, "optimal tau needs finite positive eps', |A|, K_A");
  }
  auto f = [&](double t) { return corollary_bound(t, eps_prime, action_count, gap); };
  // The bound is convex in tau; grow the bracket until it turns upward.
  double hi = 1.0;
  while (f(2.0 * hi) < f(hi) && hi < 1e300) hi *= 2.0;
  double a = 0.0;
  double b = 2.0 * hi;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(std::max(c, 1e-300));
  double fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(std::max(c, 1e-300));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return std::max(0.5 * (a + b), 1e-300);
}

double action_gap(const ExactQTable& exact) {
  if (exact.num_profiles < 2) fail(ErrorKind::InvalidParameter, "action gap needs two profiles");
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < exact.num_points; ++i) {
    const auto row = exact.row(i);
    const double m = *std::max_element(row.begin(), row.end());
    double second = -std::numeric_limits<double>::infinity();
    for (double v : row) {
      if (v < m - kArgmaxTolerance) second = std::max(second, v);
    }
    if (std::isfinite(second)) gap = std::min(gap, m - second);
  }
  return gap;
}

CorollaryReport empirical_corollary_check(const LearnedQTable& learned, const ExactQTable& exact,
                                          double tau) {
  CorollaryReport rep;
  rep.tau = tau;
  rep.eps_prime = sup_error(learned, exact);
  rep.action_gap = action_gap(exact);
  for (std::size_t i = 0; i < exact.num_points; ++i) {
    const std::vector<double> p = softmax_tau(learned.row(i), tau);
    const std::vector<double> q = argmaxe(exact.row(i));
    const double d = distance(p, q);
    if (d > rep.max_distance) {
      rep.max_distance = d;
      rep.worst_point = i;
    }
  }
  rep.bound = corollary_bound(tau, rep.eps_prime, exact.num_profiles, rep.action_gap);
  rep.pass = rep.max_distance <= rep.bound + 1e-9;
  return rep;
}

// ------------------------------------------------------------ swarm metrics

double swarm_control_error(std::span<const double> control, const SwarmParams& params) {
  if (control.size() != params.n_points) {
    fail(ErrorKind::DimensionMismatch, "control profile does not match the swarm grid");
  }
  const DistributionVector m = swarm_stationary_density(params);
  const std::vector<double> a = swarm_optimal_control_profile(params);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += m[i] * (control[i] - a[i]) * (control[i] - a[i]);
  return std::sqrt(params.cell_width() * s);
}

double swarm_density_error(const DistributionVector& density, const SwarmParams& params) {
  if (density.dimension() != params.n_points) {
    fail(ErrorKind::DimensionMismatch, "density does not match the swarm grid");
  }
  const DistributionVector m = swarm_stationary_density(params);
  return h_weighted_l2(density.weights(), m.weights(), params.cell_width());
}

double swarm_stationarity_residual(const SwarmParams& params) {
  const DistributionVector m = swarm_stationary_density(params);
  const std::vector<double> a = swarm_optimal_control_profile(params);
  const std::vector<double> next = swarm_advance(m.weights(), a, 0.0, params);
  return h_weighted_l2(next, m.weights(), params.cell_width()) / params.dt;
}

std::vector<double> swarm_density_error_trace(const Policy& policy, const SwarmParams& params,
                                              const DistributionVector& start, std::size_t steps) {
  const SwarmEnv env(params);
  std::vector<double> trace;
  trace.reserve(steps);
  DistributionVector m = start;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::vector<double> a = policy(m);
    m = env.step(m, a, env.neutral_noise()).next_state;
    trace.push_back(swarm_density_error(m, params));
  }
  return trace;
}

SwarmMetrics swarm_metrics(const Policy& actor, const SwarmParams& params,
                           const DistributionVector& start, std::size_t rollout_steps) {
  SwarmMetrics out;
  out.rollout_steps = rollout_steps;
  out.control_error = swarm_control_error(actor(swarm_stationary_density(params)), params);
  const std::vector<double> trace = swarm_density_error_trace(actor, params, start, rollout_steps);
  out.density_error = trace.empty() ? swarm_density_error(start, params) : trace.back();
  out.stationarity_residual = swarm_stationarity_residual(params);
  return out;
}

SwarmMetrics swarm_metrics(const Policy& actor, const SwarmParams& params, Rng& rng,
                           std::size_t rollout_steps) {
  const DistributionVector start = gaussian_density_sampler(params, 0.05, 0.2)(rng);
  return swarm_metrics(actor, params, start, rollout_steps);
}

// --------------------------------------------------------- Lipschitz probe

ActionSampler profile_sampler(const Environment& env) {
  const std::size_t n_actions = env.action_count();
  const std::size_t dim = env.state_dim();
  if (n_actions == 0) fail(ErrorKind::InvalidParameter, "profile sampler needs finite actions");
  return [n_actions, dim](Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, n_actions - 1);
    std::vector<double> a(dim);
    for (double& x : a) x = static_cast<double>(pick(rng));
    return a;
  };
}

InitialStateSampler grid_sampler(const SimplexGrid& grid) {
  return [grid](Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    return grid.point(pick(rng));
  };
}

namespace {

std::vector<double> expected_next(const Environment& env, const DistributionVector& mu,
                                  std::span<const double> action, const NoisePanel& panel) {
  std::vector<double> out(mu.dimension(), 0.0);
  for (std::size_t e = 0; e < panel.size(); ++e) {
    const TransitionResult r = env.step(mu, action, panel.samples[e]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += panel.weights[e] * r.next_state[i];
  }
  return out;
}

}  // namespace

LipschitzEstimate lipschitz_probe(const Environment& env, const InitialStateSampler& states,
                                  const ActionSampler& actions, const NoisePanel& panel,
                                  std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs == 0) fail(ErrorKind::InvalidParameter, "Lipschitz probe needs n_pairs >= 1");
  panel.validate();
  LipschitzEstimate est;
  for (std::size_t k = 0; k < n_pairs; ++k) {
    Rng rng(derive_seed(seed, "lipschitz", k));
    const DistributionVector mu = states(rng);
    const DistributionVector nu = states(rng);
    const std::vector<double> a = actions(rng);
    const double d = distance(mu, nu);
    if (d < 1e-14) continue;
    ++est.pairs;
    const double dphi = distance(expected_next(env, mu, a, panel), expected_next(env, nu, a, panel));
    est.transition = std::max(est.transition, dphi / d);
    est.reward = std::max(est.reward, std::abs(env.reward(mu, a) - env.reward(nu, a)) / d);
  }
  return est;
}

// ------------------------------------------------------- grid refinement

double projected_q_distance(const ExactQTable& qa, const SimplexGrid& grid_a,
                            const ExactQTable& qb, const SimplexGrid& grid_b,
                            const SimplexGrid& eval) {
  if (qa.num_profiles != qb.num_profiles || qa.num_points != grid_a.size() ||
      qb.num_points != grid_b.size() || grid_a.dimension() != eval.dimension() ||
      grid_b.dimension() != eval.dimension()) {
    fail(ErrorKind::GridMismatch, "Q tables do not share profiles and dimension");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < eval.size(); ++k) {
    const DistributionVector x = eval.point(k);
    const auto ra = qa.row(project(x, grid_a));
    const auto rb = qb.row(project(x, grid_b));
    for (std::size_t j = 0; j < ra.size(); ++j) worst = std::max(worst, std::abs(ra[j] - rb[j]));
  }
  return worst;
}

std::vector<RefinementRow> grid_refinement(const Environment& env,
                                           std::span<const std::size_t> resolutions, double gamma,
                                           double tol, const NoisePanel& panel,
                                           const SimplexGrid& eval) {
  if (resolutions.empty()) fail(ErrorKind::InvalidParameter, "no resolutions given");
  std::vector<SimplexGrid> grids;
  std::vector<ExactQTable> tables;
  for (std::size_t n : resolutions) {
    grids.emplace_back(env.state_dim(), n);
    const ProjectedModel model(env, grids.back(), panel);
    tables.push_back(exact_q(model, gamma, tol));
  }
  std::vector<RefinementRow> rows(resolutions.size());
  const std::size_t last = resolutions.size() - 1;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].resolution = resolutions[k];
    rows[k].error_vs_reference =
        k == last ? 0.0 : projected_q_distance(tables[k], grids[k], tables[last], grids[last], eval);
    rows[k].successive_difference =
        k == last ? 0.0
                  : projected_q_distance(tables[k], grids[k], tables[k + 1], grids[k + 1], eval);
  }
  return rows;
}

}  // namespace mfc
