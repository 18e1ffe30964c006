#include "mfc/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mfc/error.hpp"

namespace mfc {
namespace {

constexpr double kNegativeSlack = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::InvalidParameter, what);
}

void check_dims(const DistributionVector& mu, std::span<const double> action, std::size_t n,
                std::string_view env) {
  if (mu.dimension() != n || action.size() != n) {
    fail(ErrorKind::DimensionMismatch,
         std::string(env) + " expects " + std::to_string(n) + " components, got state " +
             std::to_string(mu.dimension()) + " and action " + std::to_string(action.size()));
  }
}

// Zeroes round-off negatives and rescales to unit mass; anything below the
// slack is a genuine instability.
DistributionVector finish_state(std::vector<double> w, double cell_width, ErrorKind on_negative,
                                std::string_view env) {
  double total = 0.0;
  for (double& x : w) {
    if (!std::isfinite(x) || x < -kNegativeSlack) {
      fail(on_negative, std::string(env) + " step produced component " + std::to_string(x));
    }
    if (x < 0.0) x = 0.0;
    total += x;
  }
  const double mass = total * cell_width;
  if (!(mass > 0.0)) fail(ErrorKind::ZeroTotalMass, std::string(env) + " step lost all mass");
  if (mass != 1.0) {
    for (double& x : w) x /= mass;
  }
  return distribution_unchecked(std::move(w), cell_width);
}

}  // namespace

TransitionResult Environment::sample_step(const DistributionVector& mu,
                                          std::span<const double> action, Rng& rng) const {
  const CommonNoiseSample noise = has_common_noise() ? sample_noise(rng) : neutral_noise();
  return step(mu, action, noise);
}

// ----------------------------------------------------------------- cyber ---

double CyberParams::worst_column_outflow() const {
  const double beta_into_D = std::max(beta_DD, beta_UD);
  const double beta_into_U = std::max(beta_UU, beta_DU);
  const double col_DI = q_rec_D + lambda;
  const double col_DS = v_H * q_inf_D + beta_into_D + lambda;
  const double col_UI = q_rec_U + lambda;
  const double col_US = v_H * q_inf_U + beta_into_U + lambda;
  return std::max({col_DI, col_DS, col_UI, col_US});
}

void CyberParams::validate() const {
  for (double v : {lambda, q_rec_D, q_rec_U, v_H, q_inf_D, q_inf_U, beta_UU, beta_UD, beta_DU,
                   beta_DD, k_D, k_I, common_noise_std}) {
    require(std::isfinite(v) && v >= 0.0, "cyber rates and costs must be finite and >= 0");
  }
  require(std::isfinite(dt) && dt > 0.0, "cyber dt must be > 0");
  require(dt * worst_column_outflow() <= 1.0,
          "cyber dt " + std::to_string(dt) + " makes I + dt*G non-stochastic (worst out-rate " +
              std::to_string(worst_column_outflow()) + ")");
}

Matrix4 cyber_generator(const DistributionVector& mu, std::span<const double> action,
                        CommonNoiseSample noise, const CyberParams& p) {
  check_dims(mu, action, 4, "cyber");
  for (double a : action) {
    if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
      fail(ErrorKind::BadActionRange, "cyber action " + std::to_string(a) + " outside [0,1]");
    }
  }
  const double nu = noise.value;
  Matrix4 g{};
  g[kDI][kDS] = (p.v_H * p.q_inf_D + p.beta_DD * mu[kDI] + p.beta_UD * mu[kUI]) * nu;
  g[kUI][kUS] = (p.v_H * p.q_inf_U + p.beta_UU * mu[kUI] + p.beta_DU * mu[kDI]) * nu;
  g[kDS][kDI] = p.q_rec_D;
  g[kUS][kUI] = p.q_rec_U;
  // Switching uses the action chosen at the source state.
  g[kDI][kUI] = p.lambda * action[kUI];
  g[kUI][kDI] = p.lambda * action[kDI];
  g[kDS][kUS] = p.lambda * action[kUS];
  g[kUS][kDS] = p.lambda * action[kDS];
  for (std::size_t col = 0; col < 4; ++col) {
    double out = 0.0;
    for (std::size_t row = 0; row < 4; ++row) {
      if (row != col) out += g[row][col];
    }
    g[col][col] = -out;
  }
  return g;
}

double cyber_reward(const DistributionVector& mu, const CyberParams& p) {
  return -(p.k_D * (mu[kDI] + mu[kDS]) + p.k_I * (mu[kDI] + mu[kUI]));
}

TransitionResult cyber_step(const DistributionVector& mu, std::span<const double> action,
                            CommonNoiseSample noise, const CyberParams& params) {
  const Matrix4 g = cyber_generator(mu, action, noise, params);
  std::vector<double> next(4);
  for (std::size_t row = 0; row < 4; ++row) {
    double flow = 0.0;
    for (std::size_t col = 0; col < 4; ++col) flow += g[row][col] * mu[col];
    next[row] = mu[row] + params.dt * flow;
  }
  for (double x : next) {
    if (x < -kNegativeSlack) {
      fail(ErrorKind::UnstableStep, "cyber step went negative (" + std::to_string(x) +
                                        "); dt too large for these rates");
    }
  }
  // Column sums vanish, so mass is already 1 up to round-off; only clamp.
  for (double& x : next) x = std::max(x, 0.0);
  return {distribution_unchecked(std::move(next)), cyber_reward(mu, params)};
}

CyberEnv::CyberEnv(CyberParams params) : params_(params) { params_.validate(); }

TransitionResult CyberEnv::step(const DistributionVector& mu, std::span<const double> action,
                                CommonNoiseSample noise) const {
  return cyber_step(mu, action, noise, params_);
}

double CyberEnv::reward(const DistributionVector& mu, std::span<const double> action) const {
  check_dims(mu, action, 4, "cyber");
  return cyber_reward(mu, params_);
}

CommonNoiseSample CyberEnv::sample_noise(Rng& rng) const {
  // Mean-one lognormal factor.
  const double s = params_.common_noise_std;
  std::normal_distribution<double> z(0.0, 1.0);
  return {std::exp(s * z(rng) - 0.5 * s * s)};
}

// ----------------------------------------------------------------- swarm ---

void SwarmParams::validate() const {
  require(n_points >= 8, "swarm needs n_points >= 8");
  require(std::isfinite(dt) && dt > 0.0, "swarm dt must be > 0");
  require(substeps >= 1, "swarm substeps must be >= 1");
  require(std::isfinite(sigma) && sigma >= 0.0, "swarm sigma must be >= 0");
  require(density_floor > 0.0, "swarm density_floor must be > 0");
  require(std::isfinite(common_noise_std) && common_noise_std >= 0.0,
          "swarm common_noise_std must be >= 0");
  const double h = cell_width();
  require(dt * sigma * sigma / (h * h) <= 0.5, "swarm dt violates the diffusion limit");
}

double SwarmParams::max_stable_speed() const {
  const double h = cell_width();
  const double diffusion = sigma * sigma / (h * h);
  return std::min(h / dt, 0.5 * h * (1.0 / dt - diffusion));
}

double swarm_phi(double x) {
  using std::numbers::pi;
  const double s = std::sin(2.0 * pi * x);
  const double c = std::cos(2.0 * pi * x);
  return -2.0 * pi * pi * (-s + c * c) + 2.0 * s;
}

double swarm_optimal_control(double x) {
  using std::numbers::pi;
  return 2.0 * pi * std::cos(2.0 * pi * x);
}

std::vector<double> swarm_optimal_control_profile(const SwarmParams& params) {
  std::vector<double> a(params.n_points);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = swarm_optimal_control(params.node(i));
  return a;
}

DistributionVector swarm_stationary_density(const SwarmParams& params) {
  using std::numbers::pi;
  std::vector<double> m(params.n_points);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::exp(2.0 * std::sin(2.0 * pi * params.node(i)));
  double total = 0.0;
  for (double v : m) total += v;
  const double z = total * params.cell_width();
  for (double& v : m) v /= z;
  return distribution_unchecked(std::move(m), params.cell_width());
}

std::vector<double> swarm_advance(std::span<const double> density, std::span<const double> action,
                                  double drift, const SwarmParams& params) {
  const std::size_t n = params.n_points;
  if (density.size() != n || action.size() != n) {
    fail(ErrorKind::DimensionMismatch, "swarm expects " + std::to_string(n) + " cells");
  }
  const double h = params.cell_width();
  const double dt = params.dt;

  // Face velocity between nodes i and i+1 is the average of the two nodal
  // velocities; the stability check is on the faces.
  std::vector<double> face_v(n);
  double vmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
    if (!std::isfinite(action[i])) fail(ErrorKind::BadActionRange, "swarm action not finite");
    face_v[i] = 0.5 * (action[i] + action[ip]) + drift;
    vmax = std::max(vmax, std::abs(face_v[i]));
  }
  const double courant = dt * vmax / h;
  const double diffusion = dt * params.sigma * params.sigma / (h * h);
  if (courant > 1.0 || diffusion > 0.5 || 2.0 * courant + diffusion > 1.0) {
    fail(ErrorKind::CFLViolation, "swarm step unstable: dt*|v|/h = " + std::to_string(courant) +
                                      ", dt*sigma^2/h^2 = " + std::to_string(diffusion));
  }

  std::vector<double> flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
    const double v = face_v[i];
    flux[i] = v > 0.0 ? v * density[i] : v * density[ip];
  }
  const double half_var = 0.5 * params.sigma * params.sigma;
  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip = (i + 1 == n) ? 0 : i + 1;
    const std::size_t im = (i == 0) ? n - 1 : i - 1;
    const double divergence = (flux[i] - flux[im]) / h;
    const double laplacian = (density[ip] - 2.0 * density[i] + density[im]) / (h * h);
    next[i] = density[i] + dt * (-divergence + half_var * laplacian);
  }
  return next;
}

double swarm_reward(const DistributionVector& density, std::span<const double> action,
                    const SwarmParams& params) {
  const std::size_t n = params.n_points;
  if (density.dimension() != n || action.size() != n) {
    fail(ErrorKind::DimensionMismatch, "swarm expects " + std::to_string(n) + " cells");
  }
  const double h = params.cell_width();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = density[i];
    const double running = -0.5 * action[i] * action[i] + swarm_phi(params.node(i)) -
                           std::log(std::max(m, params.density_floor));
    total += m * h * running;
  }
  return total;
}

TransitionResult swarm_step(const DistributionVector& density, std::span<const double> action,
                            CommonNoiseSample noise, const SwarmParams& params) {
  const double reward = swarm_reward(density, action, params);
  std::vector<double> m(density.weights().begin(), density.weights().end());
  for (std::size_t k = 0; k < params.substeps; ++k) {
    m = swarm_advance(m, action, noise.value, params);
    for (double x : m) {
      if (x < -kNegativeSlack) {
        fail(ErrorKind::NegativeDensity, "swarm density fell to " + std::to_string(x));
      }
    }
  }
  return {finish_state(std::move(m), params.cell_width(), ErrorKind::NegativeDensity, "swarm"),
          reward};
}

SwarmEnv::SwarmEnv(SwarmParams params) : params_(params) { params_.validate(); }

TransitionResult SwarmEnv::step(const DistributionVector& mu, std::span<const double> action,
                                CommonNoiseSample noise) const {
  return swarm_step(mu, action, noise, params_);
}

double SwarmEnv::reward(const DistributionVector& mu, std::span<const double> action) const {
  return swarm_reward(mu, action, params_);
}

CommonNoiseSample SwarmEnv::sample_noise(Rng& rng) const {
  std::normal_distribution<double> z(0.0, params_.common_noise_std);
  return {z(rng)};
}

// -------------------------------------------------------------- logistic ---

void LogisticParams::validate() const {
  for (double v : {bias[0], bias[1], push, feedback, target, weight, cost}) {
    require(std::isfinite(v), "logistic parameters must be finite");
  }
  require(target >= 0.0 && target <= 1.0, "logistic target must lie in [0,1]");
  require(weight >= 0.0 && cost >= 0.0, "logistic weight and cost must be >= 0");
  require(std::isfinite(common_noise_std) && common_noise_std >= 0.0,
          "logistic common_noise_std must be >= 0");
}

LogisticEnv::LogisticEnv(LogisticParams params) : params_(params) { params_.validate(); }

TransitionResult LogisticEnv::step(const DistributionVector& mu, std::span<const double> action,
                                   CommonNoiseSample noise) const {
  check_dims(mu, action, 2, "logistic");
  const double p = mu[0];
  double to_zero = 0.0;
  for (std::size_t x = 0; x < 2; ++x) {
    const double logit =
        params_.bias[x] + params_.push * action[x] + params_.feedback * (p - 0.5) + noise.value;
    to_zero += mu[x] / (1.0 + std::exp(-logit));
  }
  std::vector<double> next{to_zero, 1.0 - to_zero};
  return {finish_state(std::move(next), 1.0, ErrorKind::UnstableStep, "logistic"),
          reward(mu, action)};
}

double LogisticEnv::reward(const DistributionVector& mu, std::span<const double> action) const {
  check_dims(mu, action, 2, "logistic");
  const double gap = mu[0] - params_.target;
  return -params_.weight * gap * gap - params_.cost * (mu[0] * action[0] + mu[1] * action[1]);
}

CommonNoiseSample LogisticEnv::sample_noise(Rng& rng) const {
  std::normal_distribution<double> z(0.0, params_.common_noise_std);
  return {z(rng)};
}

double LogisticEnv::reward_bound() const {
  const double gap = std::max(params_.target, 1.0 - params_.target);
  return params_.weight * gap * gap + params_.cost;
}

}  // namespace mfc
