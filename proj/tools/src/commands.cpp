#include "mfc/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "mfc/dp_oracle.hpp"
#include "mfc/error.hpp"
#include "mfc/neural.hpp"
#include "mfc/rng.hpp"
#include "mfc/simplex.hpp"

#ifndef MFC_VERSION
#define MFC_VERSION "0.0.0"
#endif

namespace mfc::cli {
namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create output directory '" + dir.string() + "': " + ec.message());
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + (dir / name).string() + "'");
  return out;
}

void close_checked(std::ofstream& out, const std::string& what) {
  out.close();
  if (!out) fail(ErrorKind::IoError, "write failed for " + what);
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ";" : "") + std::to_string(v[k]);
  return s;
}

void require_finite_env(const EnvSpec& env, Section& section, const std::string& what) {
  if (!env.finite()) section.error("kind", what + " needs a finite-action environment (logistic or cyber)");
}

// Maps validation failures raised while building parameter structs onto the
// config key that carries them.
template <class F>
void validated(Section& section, const std::string& key, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    section.error(key, e.what());
  }
}

DdpgConfig read_ddpg_config(Section& s, const EnvSpec& env) {
  // Defaults are the settings the acceptance suite trains with.
  DdpgConfig c = env.kind == "swarm" ? acceptance::SwarmDdpgSetup::defaults().ddpg
                                     : acceptance::CyberDdpgSetup::defaults().ddpg;
  c.n_episodes = s.get_size("episodes", c.n_episodes);
  c.episode_length = s.get_size("episode_length", c.episode_length);
  c.minibatch = s.get_size("minibatch", c.minibatch);
  c.tau = s.get_double("tau", c.tau);
  c.gamma = s.get_double("gamma", c.gamma);
  c.action_noise_std = s.get_double("noise_std", c.action_noise_std);
  c.actor_learning_rate = s.get_double("actor_lr", c.actor_learning_rate);
  c.critic_learning_rate = s.get_double("critic_lr", c.critic_learning_rate);
  c.buffer_capacity = s.get_size("buffer_capacity", c.buffer_capacity);
  c.buffer_reset_per_episode = s.get_bool("buffer_reset", c.buffer_reset_per_episode);
  c.actor_hidden = s.get_sizes("actor_hidden", c.actor_hidden);
  c.critic_hidden = s.get_sizes("critic_hidden", c.critic_hidden);
  c.critic_steps = s.get_size("critic_steps", c.critic_steps);
  c.actor_delay = s.get_size("actor_delay", c.actor_delay);
  c.reward_scale = s.get_double("reward_scale", c.reward_scale);
  c.last_layer_init = s.get_double("last_layer_init", c.last_layer_init);
  c.action_low = s.get_double("action_low", c.action_low);
  c.action_high = s.get_double("action_high", c.action_high);
  validated(s, "episodes", [&] { c.validate(); });
  return c;
}

std::string weights_text(const DistributionVector& mu) {
  std::string s;
  for (std::size_t i = 0; i < mu.dimension(); ++i) s += (i ? "," : "") + format_double(mu[i]);
  return s;
}

InitialStateSampler initial_sampler(const EnvSpec& env, double std_min, double std_max) {
  if (env.kind == "swarm") return gaussian_density_sampler(env.swarm, std_min, std_max);
  return uniform_simplex_sampler(env.kind == "cyber" ? 4 : 2);
}

}  // namespace

std::string version() { return MFC_VERSION; }

// ------------------------------------------------------------- environment

std::unique_ptr<Environment> EnvSpec::make() const {
  if (kind == "logistic") return std::make_unique<LogisticEnv>(logistic);
  if (kind == "cyber") return std::make_unique<CyberEnv>(cyber);
  return std::make_unique<SwarmEnv>(swarm);
}

EnvSpec load_environment(const Config& config) {
  Section s(config, "environment");
  if (!s.present()) s.error("kind", "missing [environment] section");
  EnvSpec e;
  e.kind = s.get_choice("kind", {"logistic", "cyber", "swarm"});
  if (e.kind == "logistic") {
    auto& p = e.logistic;
    p.bias[0] = s.get_double("bias_0", p.bias[0]);
    p.bias[1] = s.get_double("bias_1", p.bias[1]);
    p.push = s.get_double("push", p.push);
    p.feedback = s.get_double("feedback", p.feedback);
    p.target = s.get_double("target", p.target);
    p.weight = s.get_double("weight", p.weight);
    p.cost = s.get_double("cost", p.cost);
    p.common_noise_std = s.get_double("common_noise_std", p.common_noise_std);
    validated(s, "kind", [&] { p.validate(); });
  } else if (e.kind == "cyber") {
    auto& p = e.cyber;
    p.lambda = s.get_double("lambda", p.lambda);
    p.q_rec_D = s.get_double("q_rec_D", p.q_rec_D);
    p.q_rec_U = s.get_double("q_rec_U", p.q_rec_U);
    p.v_H = s.get_double("v_H", p.v_H);
    p.q_inf_D = s.get_double("q_inf_D", p.q_inf_D);
    p.q_inf_U = s.get_double("q_inf_U", p.q_inf_U);
    p.beta_UU = s.get_double("beta_UU", p.beta_UU);
    p.beta_UD = s.get_double("beta_UD", p.beta_UD);
    p.beta_DU = s.get_double("beta_DU", p.beta_DU);
    p.beta_DD = s.get_double("beta_DD", p.beta_DD);
    p.k_D = s.get_double("k_D", p.k_D);
    p.k_I = s.get_double("k_I", p.k_I);
    p.dt = s.get_double("dt", p.dt);
    p.common_noise_std = s.get_double("common_noise_std", p.common_noise_std);
    validated(s, "kind", [&] { p.validate(); });
  } else {
    auto& p = e.swarm;
    p.n_points = s.get_size("n_points", p.n_points);
    p.dt = s.get_double("dt", p.dt);
    p.substeps = s.get_size("substeps", p.substeps);
    p.sigma = s.get_double("sigma", p.sigma);
    p.density_floor = s.get_double("density_floor", p.density_floor);
    p.common_noise_std = s.get_double("common_noise_std", p.common_noise_std);
    validated(s, "kind", [&] { p.validate(); });
  }
  s.finish();
  return e;
}

// --------------------------------------------------------------------- run

Metadata RunSettings::metadata(const Metadata& extra) const {
  Metadata m{{"command", command}, {"config_hash", config_hash}, {"seed", std::to_string(seed)},
             {"version", version()}};
  m.insert(m.end(), extra.begin(), extra.end());
  return m;
}

RunSettings load_run(const Config& config, const std::string& command) {
  Section s(config, "run");
  RunSettings r;
  r.command = command;
  r.seed = s.get_u64("seed", 1);
  r.output = s.get_string("output", "out/" + command);
  r.config_hash = config.hash({"run.output"});
  s.finish();
  return r;
}

// ------------------------------------------------------------------ oracle

OracleJob load_oracle(const Config& config) {
  config.require_sections_within({"run", "environment", "oracle"});
  OracleJob j;
  j.run = load_run(config, "oracle");
  j.env = load_environment(config);
  Section s(config, "oracle");
  Section env_section(config, "environment");
  require_finite_env(j.env, env_section, "oracle");
  j.resolution = s.get_size("resolution", j.resolution);
  j.gamma = s.get_double("gamma", j.gamma);
  j.tol = s.get_double("tol", j.tol);
  j.noise_samples = s.get_size("noise_samples", j.noise_samples);
  if (j.resolution == 0) s.error("resolution", "must be >= 1");
  if (!(j.gamma >= 0.0 && j.gamma < 1.0)) s.error("gamma", "must lie in [0,1)");
  if (!(j.tol > 0.0)) s.error("tol", "must be > 0");
  if (j.noise_samples == 0) s.error("noise_samples", "must be >= 1");
  s.finish();
  return j;
}

void run_oracle(const OracleJob& job, std::ostream& log) {
  const auto env = job.env.make();
  const SimplexGrid grid(env->state_dim(), job.resolution);
  Rng rng = make_rng(job.run.seed, "oracle.noise");
  const auto panel = env->has_common_noise() ? NoisePanel::sampled(*env, job.noise_samples, rng)
                                             : NoisePanel::deterministic(*env);
  const ProjectedModel model(*env, grid, panel);
  SolveStats qs, vs;
  const auto q = exact_q(model, job.gamma, job.tol, &qs);
  const auto v = value_iteration(model, job.gamma, job.tol, &vs);
  const auto vq = q.row_max();
  double gap = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) gap = std::max(gap, std::abs(vq[i] - v[i]));

  const auto meta = job.run.metadata({{"environment", job.env.kind},
                                      {"gamma", format_double(job.gamma)},
                                      {"tol", format_double(job.tol)},
                                      {"noise_samples", std::to_string(panel.size())}});
  auto qf = open_output(job.run.output, "q_table.csv");
  write_q_table(qf, grid, model.num_profiles(), q.values, meta);
  close_checked(qf, "q_table.csv");
  auto vf = open_output(job.run.output, "v_table.csv");
  write_value_table(vf, grid, v, meta);
  close_checked(vf, "v_table.csv");
  auto sf = open_output(job.run.output, "summary.csv");
  write_metadata(sf, meta);
  sf << "grid_points,profiles,q_sweeps,q_residual,v_sweeps,v_residual,max_abs_v_minus_max_q\n"
     << grid.size() << ',' << model.num_profiles() << ',' << qs.sweeps << ',' << format_double(qs.final_residual)
     << ',' << vs.sweeps << ',' << format_double(vs.final_residual) << ',' << format_double(gap) << '\n';
  close_checked(sf, "summary.csv");
  log << "oracle: " << grid.size() << " points x " << model.num_profiles() << " profiles, " << qs.sweeps
      << " Q sweeps, |V - max Q| = " << format_double(gap) << " -> " << job.run.output.string() << '\n';
}

// --------------------------------------------------------------------- mfq

MfqJob load_mfq(const Config& config) {
  config.require_sections_within({"run", "environment", "mfq"});
  MfqJob j;
  j.run = load_run(config, "mfq");
  j.env = load_environment(config);
  Section env_section(config, "environment");
  require_finite_env(j.env, env_section, "mfq");
  Section s(config, "mfq");
  j.resolution = s.get_size("resolution", j.resolution);
  j.mfq.gamma = s.get_double("gamma", j.mfq.gamma);
  j.mfq.kappa = s.get_double("kappa", j.mfq.kappa);
  j.mfq.n_episodes = s.get_size("episodes", j.mfq.n_episodes);
  j.mfq.sweep_order = s.get_choice("sweep", {"lexicographic", "shuffled"}, "lexicographic") == "shuffled"
                          ? SweepOrder::Shuffled
                          : SweepOrder::Lexicographic;
  j.mfq.in_place = s.get_bool("in_place", false);
  j.log_every = s.get_size("log_every", 1);
  if (s.has("oracle_table")) {
    j.oracle_table = s.get_string("oracle_table");
    if (!fs::exists(*j.oracle_table)) {
      s.error("oracle_table", "file '" + j.oracle_table->string() + "' does not exist");
    }
  }
  if (j.resolution == 0) s.error("resolution", "must be >= 1");
  if (j.log_every == 0) s.error("log_every", "must be >= 1");
  validated(s, "episodes", [&] { j.mfq.validate(); });
  s.finish();
  return j;
}

void run_mfq(const MfqJob& job, std::ostream& log) {
  const auto env = job.env.make();
  const SimplexGrid grid(env->state_dim(), job.resolution);
  std::optional<ExactQTable> oracle;
  if (job.oracle_table) {
    const auto t = read_table(job.oracle_table->string());
    if (!(t.grid == grid) || t.columns != enumerate_action_profiles(env->state_dim(), env->action_count()).size()) {
      fail(ErrorKind::GridMismatch, "oracle table '" + job.oracle_table->string() +
                                        "' does not match the training grid and profiles");
    }
    oracle = t.as_q_table();
  }
  const auto meta = job.run.metadata({{"environment", job.env.kind},
                                      {"gamma", format_double(job.mfq.gamma)},
                                      {"kappa", format_double(job.mfq.kappa)},
                                      {"episodes", std::to_string(job.mfq.n_episodes)}});
  auto curve = open_output(job.run.output, "learning_curve.csv");
  write_metadata(curve, meta);
  curve << "episode,mean_td_magnitude" << (oracle ? ",sup_error_vs_oracle" : "") << '\n';
  Rng rng = make_rng(job.run.seed, "mfq");
  const auto q = mfq_train(*env, grid, job.mfq, rng, [&](const LearnedQTable& t, const MfqEpisodeStats& st) {
    if (st.episode % job.log_every != 0 && st.episode != job.mfq.n_episodes) return;
    curve << st.episode << ',' << format_double(st.mean_td_magnitude);
    if (oracle) curve << ',' << format_double(sup_error(t, *oracle));
    curve << '\n';
  });
  close_checked(curve, "learning_curve.csv");
  auto qf = open_output(job.run.output, "q_table.csv");
  write_q_table(qf, grid, q.num_profiles(), q.values, meta);
  close_checked(qf, "q_table.csv");
  auto cf = open_output(job.run.output, "q_table_counts.csv");
  write_count_table(cf, grid, q.num_profiles(), q.visit_counts, meta);
  close_checked(cf, "q_table_counts.csv");
  log << "mfq: " << q.episode << " episodes on " << grid.size() << " points";
  if (oracle) log << ", sup error vs oracle " << format_double(sup_error(q, *oracle));
  log << " -> " << job.run.output.string() << '\n';
}

// -------------------------------------------------------------------- ddpg

DdpgJob load_ddpg(const Config& config) {
  config.require_sections_within({"run", "environment", "ddpg"});
  DdpgJob j;
  j.run = load_run(config, "ddpg");
  j.env = load_environment(config);
  Section s(config, "ddpg");
  j.ddpg = read_ddpg_config(s, j.env);
  j.init_std_min = s.get_double("init_std_min", j.init_std_min);
  j.init_std_max = s.get_double("init_std_max", j.init_std_max);
  j.replay_time = s.get_double("replay_time", j.replay_time);
  j.profile_episodes = s.get_sizes("profile_episodes", std::vector<std::size_t>{});
  j.evolution_means = s.get_doubles("evolution_means", j.evolution_means);
  j.evolution_stds = s.get_doubles("evolution_stds", j.evolution_stds);
  j.evolution_steps = s.get_size("evolution_steps", j.evolution_steps);
  j.evolution_every = s.get_size("evolution_every", j.evolution_every);
  if (!(j.init_std_min > 0.0 && j.init_std_max >= j.init_std_min)) {
    s.error("init_std_min", "need 0 < init_std_min <= init_std_max");
  }
  if (!(j.replay_time > 0.0)) s.error("replay_time", "must be > 0");
  if (j.evolution_means.size() != j.evolution_stds.size()) {
    s.error("evolution_stds", "needs one entry per evolution mean");
  }
  for (double sd : j.evolution_stds) {
    if (!(sd > 0.0)) s.error("evolution_stds", "entries must be > 0");
  }
  if (j.evolution_every == 0) s.error("evolution_every", "must be >= 1");
  if (j.env.kind == "swarm" && j.ddpg.action_high > j.env.swarm.max_stable_speed()) {
    s.error("action_high", "exceeds the stable speed " + format_double(j.env.swarm.max_stable_speed()) +
                               " of the swarm scheme");
  }
  if (j.env.kind == "swarm" && -j.ddpg.action_low > j.env.swarm.max_stable_speed()) {
    s.error("action_low", "exceeds the stable speed of the swarm scheme");
  }
  s.finish();
  return j;
}

namespace {

void write_swarm_profile(const fs::path& dir, const std::string& name, const MLPParams& actor, const DdpgJob& job,
                         const Metadata& meta) {
  const auto& p = job.env.swarm;
  const auto mstar = swarm_stationary_density(p);
  const auto control = actor_policy(actor, job.ddpg.action_low, job.ddpg.action_high)(mstar);
  const auto astar = swarm_optimal_control_profile(p);
  auto out = open_output(dir, name);
  write_metadata(out, meta);
  out << "x,control,a_star,mu_star\n";
  for (std::size_t i = 0; i < p.n_points; ++i) {
    out << format_double(p.node(i)) << ',' << format_double(control[i]) << ',' << format_double(astar[i]) << ','
        << format_double(mstar[i]) << '\n';
  }
  close_checked(out, name);
}

}  // namespace

void run_ddpg(const DdpgJob& job, std::ostream& log) {
  const auto env = job.env.make();
  const auto meta = job.run.metadata({{"environment", job.env.kind},
                                      {"episodes", std::to_string(job.ddpg.n_episodes)},
                                      {"episode_length", std::to_string(job.ddpg.episode_length)},
                                      {"actor_hidden", join_sizes(job.ddpg.actor_hidden)},
                                      {"critic_hidden", join_sizes(job.ddpg.critic_hidden)}});
  auto train_log = open_output(job.run.output, "training_log.csv");
  write_metadata(train_log, meta);
  train_log << "episode,mean_return,critic_loss,actor_objective,wall_ms\n";
  Rng rng = make_rng(job.run.seed, "ddpg");
  const auto result = ddpg_train(
      *env, job.ddpg, initial_sampler(job.env, job.init_std_min, job.init_std_max), rng,
      [&](const DdpgTrainer& t, const EpisodeLog& e) {
        train_log << e.episode << ',' << format_double(e.mean_return) << ',' << format_double(e.critic_loss) << ','
                  << format_double(e.actor_objective) << ',' << format_double(e.wall_ms) << '\n';
        if (e.episode % 100 == 0) {
          log << "ddpg: episode " << e.episode << " mean reward " << format_double(e.mean_return) << '\n';
        }
        if (job.env.kind == "swarm" &&
            std::find(job.profile_episodes.begin(), job.profile_episodes.end(), e.episode) !=
                job.profile_episodes.end()) {
          write_swarm_profile(job.run.output, "control_ep" + std::to_string(e.episode) + ".csv", t.actor(), job,
                              meta);
        }
      });
  close_checked(train_log, "training_log.csv");
  {
    auto a = open_output(job.run.output, "actor.ckpt");
    save_checkpoint(result.actor, a);
    close_checked(a, "actor.ckpt");
    auto c = open_output(job.run.output, "critic.ckpt");
    save_checkpoint(result.critic, c);
    close_checked(c, "critic.ckpt");
  }
  const auto policy = actor_policy(result.actor, job.ddpg.action_low, job.ddpg.action_high);
  if (job.env.kind == "cyber") {
    const std::vector<std::vector<double>> starts{{0.25, 0.25, 0.25, 0.25}, {1, 0, 0, 0}, {0, 0, 0, 1}};
    const auto steps = static_cast<std::size_t>(std::llround(job.replay_time / job.env.cyber.dt));
    for (std::size_t k = 0; k < starts.size(); ++k) {
      Rng unused(0);
      const auto tr = rollout(*env, policy, new_distribution(starts[k]), steps, unused);
      const std::string name = "trajectory_" + std::to_string(k) + ".csv";
      auto out = open_output(job.run.output, name);
      write_metadata(out, meta);
      write_metadata(out, {{"start", weights_text(tr.states.front())}});
      out << "t,mu_DI,mu_DS,mu_UI,mu_US\n";
      for (std::size_t t = 0; t < tr.states.size(); ++t) {
        out << format_double(static_cast<double>(t) * job.env.cyber.dt);
        for (std::size_t i = 0; i < 4; ++i) out << ',' << format_double(tr.states[t][i]);
        out << '\n';
      }
      close_checked(out, name);
    }
  } else if (job.env.kind == "swarm") {
    write_swarm_profile(job.run.output, "control_final.csv", result.actor, job, meta);
    const auto& p = job.env.swarm;
    for (std::size_t k = 0; k < job.evolution_means.size(); ++k) {
      const auto mu0 = wrapped_gaussian_density(p, job.evolution_means[k], job.evolution_stds[k]);
      Rng unused(0);
      const auto tr = rollout(*env, policy, mu0, job.evolution_steps, unused);
      const std::string name = "evolution_" + std::to_string(k) + ".csv";
      auto out = open_output(job.run.output, name);
      write_metadata(out, meta);
      write_metadata(out, {{"start_mean", format_double(job.evolution_means[k])},
                           {"start_std", format_double(job.evolution_stds[k])}});
      out << "t,x,density,control\n";
      for (std::size_t t = 0; t < tr.states.size(); t += job.evolution_every) {
        const auto a = policy(tr.states[t]);
        for (std::size_t i = 0; i < p.n_points; ++i) {
          out << format_double(static_cast<double>(t) * p.step_duration()) << ',' << format_double(p.node(i)) << ','
              << format_double(tr.states[t][i]) << ',' << format_double(a[i]) << '\n';
        }
      }
      close_checked(out, name);
    }
  }
  log << "ddpg: " << result.log.size() << " episodes -> " << job.run.output.string() << '\n';
}

// ---------------------------------------------------------------- evaluate

EvaluateJob load_evaluate(const Config& config) {
  config.require_sections_within({"run", "environment", "evaluate"});
  EvaluateJob j;
  j.run = load_run(config, "evaluate");
  j.env = load_environment(config);
  Section s(config, "evaluate");
  j.policy = s.get_choice("policy", {"actor", "table", "optimal"});
  if (j.policy == "optimal" && j.env.kind != "swarm") s.error("policy", "'optimal' is only tabulated for swarm");
  if (j.policy == "table") require_finite_env(j.env, s, "a Q-table policy");
  if (j.policy != "optimal") {
    j.source = s.get_string("source");
    if (!fs::exists(j.source)) s.error("source", "file '" + j.source.string() + "' does not exist");
  }
  const bool swarm = j.env.kind == "swarm";
  if (j.policy == "actor") {
    j.action_low = s.get_double("action_low", swarm ? -8.0 : 0.0);
    j.action_high = s.get_double("action_high", swarm ? 8.0 : 1.0);
    if (!(j.action_high > j.action_low)) s.error("action_high", "action box is empty");
  }
  if (swarm) {
    const double mean = s.get_double("start_mean", 0.3);
    const double sd = s.get_double("start_std", 0.1);
    if (!(sd > 0.0)) s.error("start_std", "must be > 0");
    j.start = {mean, sd};
  } else {
    const std::size_t dim = j.env.kind == "cyber" ? 4 : 2;
    j.start = s.get_doubles("start", std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
    if (j.start.size() != dim) s.error("start", "needs " + std::to_string(dim) + " weights");
    validated(s, "start", [&] { (void)new_distribution(j.start); });
  }
  j.gamma = s.get_double("gamma", j.gamma);
  j.horizon = s.get_size("horizon", j.horizon);
  j.noise_rollouts = s.get_size("noise_rollouts", j.noise_rollouts);
  if (!(j.gamma >= 0.0 && j.gamma < 1.0)) s.error("gamma", "must lie in [0,1)");
  if (j.horizon == 0) s.error("horizon", "must be >= 1");
  if (j.noise_rollouts == 0) s.error("noise_rollouts", "must be >= 1");
  s.finish();
  return j;
}

void run_evaluate(const EvaluateJob& job, std::ostream& log) {
  const auto env = job.env.make();
  Policy policy;
  std::shared_ptr<LoadedTable> table;
  if (job.policy == "actor") {
    const auto actor = std::make_shared<MLPParams>(load_checkpoint(job.source.string()));
    if (actor->input_dim() != env->state_dim() || actor->output_dim() != env->state_dim()) {
      fail(ErrorKind::DimensionMismatch, "actor checkpoint does not match the environment dimension");
    }
    policy = actor_policy(*actor, job.action_low, job.action_high);
  } else if (job.policy == "table") {
    table = std::make_shared<LoadedTable>(read_table(job.source.string()));
    const auto profiles = enumerate_action_profiles(env->state_dim(), env->action_count());
    if (table->grid.dimension() != env->state_dim() || table->columns != profiles.size()) {
      fail(ErrorKind::GridMismatch, "Q table does not match the environment's profiles");
    }
    const auto greedy = greedy_policy(table->values, table->grid.size(), table->columns);
    policy = [table, profiles, greedy](const DistributionVector& mu) {
      return profiles[greedy[project(mu, table->grid)]].as_real();
    };
  } else {
    const auto astar = swarm_optimal_control_profile(job.env.swarm);
    policy = [astar](const DistributionVector&) { return astar; };
  }
  const auto mu0 = job.env.kind == "swarm" ? wrapped_gaussian_density(job.env.swarm, job.start[0], job.start[1])
                                           : new_distribution(job.start);
  Rng rng = make_rng(job.run.seed, "evaluate");
  const auto ev = evaluate_policy(*env, policy, mu0, job.gamma, job.horizon, job.noise_rollouts, rng);
  Rng path = make_rng(job.run.seed, "evaluate.trajectory");
  const auto tr = rollout(*env, policy, mu0, job.horizon, path);

  const auto meta = job.run.metadata({{"environment", job.env.kind},
                                      {"policy", job.policy},
                                      {"gamma", format_double(job.gamma)},
                                      {"horizon", std::to_string(job.horizon)}});
  auto out = open_output(job.run.output, "evaluation.csv");
  write_metadata(out, meta);
  out << "metric,value\n";
  out << "discounted_return," << format_double(ev.mean) << '\n';
  out << "discounted_return_std," << format_double(ev.stddev) << '\n';
  out << "truncation_bound," << format_double(ev.truncation_bound) << '\n';
  out << "rollouts," << ev.rollouts << '\n';
  out << "mean_step_reward," << format_double(tr.mean_reward()) << '\n';
  if (job.env.kind == "swarm") {
    const auto& p = job.env.swarm;
    out << "control_error," << format_double(swarm_control_error(policy(swarm_stationary_density(p)), p)) << '\n';
    out << "density_error," << format_double(swarm_density_error(tr.states.back(), p)) << '\n';
    out << "stationarity_residual," << format_double(swarm_stationarity_residual(p)) << '\n';
  }
  close_checked(out, "evaluation.csv");

  auto traj = open_output(job.run.output, "trajectory.csv");
  write_metadata(traj, meta);
  const std::size_t dim = env->state_dim();
  traj << "t";
  for (std::size_t i = 0; i < dim; ++i) traj << ",m_" << i;
  for (std::size_t i = 0; i < dim; ++i) traj << ",a_" << i;
  traj << ",reward\n";
  for (std::size_t t = 0; t < tr.rewards.size(); ++t) {
    traj << t;
    for (std::size_t i = 0; i < dim; ++i) traj << ',' << format_double(tr.states[t][i]);
    for (std::size_t i = 0; i < dim; ++i) traj << ',' << format_double(tr.actions[t][i]);
    traj << ',' << format_double(tr.rewards[t]) << '\n';
  }
  close_checked(traj, "trajectory.csv");
  log << "evaluate: discounted return " << format_double(ev.mean) << ", mean step reward "
      << format_double(tr.mean_reward()) << " -> " << job.run.output.string() << '\n';
}

// ------------------------------------------------------------------- bound

BoundJob load_bound(const Config& config) {
  config.require_sections_within({"run", "environment", "bound"});
  BoundJob j;
  j.run = load_run(config, "bound");
  if (config.has_section("environment")) j.env = load_environment(config);
  Section s(config, "bound");
  if (!s.present()) s.error("epsilon", "missing [bound] section");
  auto& in = j.inputs;
  in.epsilon = s.get_double("epsilon");
  in.gamma = s.get_double("gamma");
  in.kappa = s.get_double("kappa", in.kappa);
  in.delta = s.get_double("delta", in.delta);
  in.lipschitz_value = s.get_double("lipschitz_value");
  in.action_gap = s.get_double("action_gap");
  j.taus = s.get_doubles("taus", std::vector<double>{1.0, 10.0, 100.0});
  j.probe_pairs = s.get_size("probe_pairs", j.probe_pairs);
  j.probe_resolution = s.get_size("probe_resolution", j.probe_resolution);

  auto needs_env = [&](const std::string& key) {
    if (!j.env) s.error(key, "not given and no [environment] section to derive it from");
    if (!j.env->finite()) s.error(key, "can only be derived for a finite-action environment");
  };
  for (const auto* key : {"lipschitz_transition", "lipschitz_reward"}) {
    if (!s.has(key)) needs_env(key);
  }
  if (s.has("lipschitz_transition")) in.lipschitz_transition = s.get_double("lipschitz_transition");
  else j.lipschitz_transition_source = "probed";
  if (s.has("lipschitz_reward")) in.lipschitz_reward = s.get_double("lipschitz_reward");
  else j.lipschitz_reward_source = "probed";

  std::optional<SimplexGrid> grid;
  std::size_t profiles = 0;
  if (j.env && j.env->finite()) {
    const auto env = j.env->make();
    grid.emplace(env->state_dim(), s.get_size("resolution", 8));
    profiles = enumerate_action_profiles(env->state_dim(), env->action_count()).size();
  }
  auto derived = [&](const char* key, double from_env) {
    j.sources[key] = s.has(key) ? "config" : "environment";
    if (s.has(key)) return s.get_double(key);
    needs_env(key);
    return from_env;
  };
  auto derived_size = [&](const char* key, auto from_env) -> std::size_t {
    j.sources[key] = s.has(key) ? "config" : "environment";
    if (s.has(key)) return s.get_size(key);
    needs_env(key);
    return from_env();
  };
  in.grid_size = derived_size("grid_size", [&] { return grid->size(); });
  in.profile_count = derived_size("profile_count", [&] { return profiles; });
  in.grid_fineness = derived("grid_fineness", grid ? grid->epsilon() : 0.0);
  in.covering_time = derived("covering_time", static_cast<double>(in.grid_size * in.profile_count));
  in.value_max = derived("value_max", j.env && j.env->finite() ? j.env->make()->reward_bound() / (1 - in.gamma) : 0.0);
  validated(s, "epsilon", [&] { in.validate(); });
  for (double t : j.taus) {
    if (!(t > 0.0)) s.error("taus", "entries must be > 0");
  }
  if (j.probe_pairs == 0) s.error("probe_pairs", "must be >= 1");
  s.finish();
  return j;
}

void run_bound(BoundJob job, std::ostream& out) {
  auto& in = job.inputs;
  if (job.env && (job.lipschitz_transition_source == "probed" || job.lipschitz_reward_source == "probed")) {
    const auto env = job.env->make();
    const SimplexGrid grid(env->state_dim(), job.probe_resolution);
    const auto est = lipschitz_probe(*env, grid_sampler(grid), profile_sampler(*env), NoisePanel::deterministic(*env),
                                     job.probe_pairs, derive_seed(job.run.seed, "bound.lipschitz"));
    if (job.lipschitz_transition_source == "probed") in.lipschitz_transition = est.transition;
    if (job.lipschitz_reward_source == "probed") in.lipschitz_reward = est.reward;
  }
  const double eps_prime = theorem_error(in);
  const auto order = nepi_order_terms(in);
  std::vector<std::tuple<std::string, double, std::string>> rows{
      {"epsilon", in.epsilon, "config"},
      {"gamma", in.gamma, "config"},
      {"lipschitz_value", in.lipschitz_value, "config"},
      {"lipschitz_transition", in.lipschitz_transition, job.lipschitz_transition_source},
      {"lipschitz_reward", in.lipschitz_reward, job.lipschitz_reward_source},
      {"grid_fineness", in.grid_fineness, job.sources.at("grid_fineness")},
      {"covering_time", in.covering_time, job.sources.at("covering_time")},
      {"grid_size", static_cast<double>(in.grid_size), job.sources.at("grid_size")},
      {"profile_count", static_cast<double>(in.profile_count), job.sources.at("profile_count")},
      {"value_max", in.value_max, job.sources.at("value_max")},
      {"action_gap", in.action_gap, "config"},
      {"theorem_error", eps_prime, "computed"},
      {"covering_time_delta", order.covering_time_delta, "computed"},
      {"beta", order.beta, "computed"},
      {"nepi_first_term", order.first_term, "computed"},
      {"nepi_second_term", order.second_term, "computed"},
      {"nepi_order", order.total, "computed; constant set to 1"},
  };
  for (double tau : job.taus) {
    rows.emplace_back("corollary_bound@tau=" + format_double(tau),
                      corollary_bound(tau, eps_prime, in.profile_count, in.action_gap), "computed");
  }
  if (eps_prime > 0.0 && std::isfinite(in.action_gap)) {
    const double tau = corollary_optimal_tau(eps_prime, in.profile_count, in.action_gap);
    rows.emplace_back("optimal_tau", tau, "computed");
    rows.emplace_back("corollary_bound@optimal_tau", corollary_bound(tau, eps_prime, in.profile_count, in.action_gap),
                      "computed");
  }
  auto file = open_output(job.run.output, "bound.csv");
  write_metadata(file, job.run.metadata());
  for (std::ostream* o : {static_cast<std::ostream*>(&file), &out}) {
    *o << "metric,value,source\n";
    for (const auto& [m, v, src] : rows) *o << m << ',' << format_double(v) << ',' << src << '\n';
  }
  close_checked(file, "bound.csv");
}

// -------------------------------------------------------------- acceptance

AcceptanceJob load_acceptance(const Config& config) {
  config.require_sections_within({"run", "acceptance"});
  AcceptanceJob j;
  j.run = load_run(config, "acceptance");
  j.options.seed = j.run.seed;
  Section s(config, "acceptance");
  for (std::size_t id : s.get_sizes("criteria", std::vector<std::size_t>{})) {
    if (id < 1 || id > static_cast<std::size_t>(acceptance::kCriterionCount)) s.error("criteria", "ids are 1..9");
    j.options.criteria.push_back(static_cast<int>(id));
  }
  j.fast = s.get_bool("fast", false);
  j.options.swarm.ddpg.n_episodes = s.get_size("swarm_episodes", j.options.swarm.ddpg.n_episodes);
  j.options.cyber.ddpg.n_episodes = s.get_size("cyber_episodes", j.options.cyber.ddpg.n_episodes);
  if (j.options.swarm.ddpg.n_episodes == 0) s.error("swarm_episodes", "must be >= 1");
  if (j.options.cyber.ddpg.n_episodes == 0) s.error("cyber_episodes", "must be >= 1");
  s.finish();
  if (j.options.criteria.empty()) {
    for (int k = 1; k <= acceptance::kCriterionCount; ++k) j.options.criteria.push_back(k);
  }
  if (j.fast) std::erase_if(j.options.criteria, acceptance::is_slow);
  return j;
}

bool run_acceptance(const AcceptanceJob& job, std::ostream& out) {
  const auto results = acceptance::run_all(job.options, [&](const std::string& line) {
    if (line.rfind("criterion ", 0) != 0) out << line << '\n';
  });
  bool all = true;
  for (const auto& r : results) {
    out << acceptance::summary_line(r) << '\n';
    all = all && r.pass();
  }
  auto file = open_output(job.run.output, "acceptance.csv");
  acceptance::write_csv(file, results,
                        job.run.metadata({{"swarm_episodes", std::to_string(job.options.swarm.ddpg.n_episodes)},
                                          {"cyber_episodes", std::to_string(job.options.cyber.ddpg.n_episodes)}}));
  close_checked(file, "acceptance.csv");
  return all;
}

// ---------------------------------------------------------------- dispatch

int dispatch(const std::string& command, const Config& config, std::ostream& out, std::ostream& err) {
  // Loading validates everything; failures there are configuration errors.
  std::function<int()> run;
  try {
    if (command == "oracle") {
      run = [job = load_oracle(config), &out] { run_oracle(job, out); return int{kExitOk}; };
    } else if (command == "mfq") {
      run = [job = load_mfq(config), &out] { run_mfq(job, out); return int{kExitOk}; };
    } else if (command == "ddpg") {
      run = [job = load_ddpg(config), &out] { run_ddpg(job, out); return int{kExitOk}; };
    } else if (command == "evaluate") {
      run = [job = load_evaluate(config), &out] { run_evaluate(job, out); return int{kExitOk}; };
    } else if (command == "bound") {
      run = [job = load_bound(config), &out] { run_bound(job, out); return int{kExitOk}; };
    } else if (command == "acceptance") {
      run = [job = load_acceptance(config), &out] { return run_acceptance(job, out) ? int{kExitOk} : int{kExitAcceptance}; };
    } else {
      err << "error: unknown command '" << command << "'\n";
      return kExitConfig;
    }
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    return run();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace mfc::cli
