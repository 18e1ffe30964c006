#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfc/acceptance.hpp"
#include "mfc/analysis.hpp"
#include "mfc/ddpg.hpp"
#include "mfc/envs.hpp"
#include "mfc/mfq.hpp"
#include "mfc/table_io.hpp"
#include "mfc/cli/config.hpp"

namespace mfc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitNumerical = 2,
  kExitAcceptance = 3,
};

/// Version string written into every output header.
std::string version();

/// [environment]: kind = logistic | cyber | swarm, plus that kind's parameters.
struct EnvSpec {
  std::string kind;
  LogisticParams logistic;
  CyberParams cyber;
  SwarmParams swarm;

  std::unique_ptr<Environment> make() const;
  bool finite() const { return kind != "swarm"; }
};
EnvSpec load_environment(const Config& config);

/// [run]: seed and output directory; shared by every command.
struct RunSettings {
  std::string command;
  std::uint64_t seed = 1;
  std::filesystem::path output = "out";
  std::string config_hash;

  /// command, config_hash, seed, version, then `extra`.
  Metadata metadata(const Metadata& extra = {}) const;
};
RunSettings load_run(const Config& config, const std::string& command);

struct OracleJob {
  RunSettings run;
  EnvSpec env;
  std::size_t resolution = 8;
  double gamma = 0.5;
  double tol = 1e-8;
  std::size_t noise_samples = 1;
};
OracleJob load_oracle(const Config& config);
/// Writes q_table.csv, v_table.csv and summary.csv.
void run_oracle(const OracleJob& job, std::ostream& log);

struct MfqJob {
  RunSettings run;
  EnvSpec env;
  std::size_t resolution = 8;
  MfqConfig mfq;
  std::optional<std::filesystem::path> oracle_table;
  std::size_t log_every = 1;
};
MfqJob load_mfq(const Config& config);
/// Writes q_table.csv, q_table_counts.csv and learning_curve.csv.
void run_mfq(const MfqJob& job, std::ostream& log);

struct DdpgJob {
  RunSettings run;
  EnvSpec env;
  DdpgConfig ddpg;
  double init_std_min = 0.05;  // swarm initial Gaussian widths
  double init_std_max = 0.2;
  double replay_time = 10.0;   // cyber distribution replay
  std::vector<std::size_t> profile_episodes;
  std::vector<double> evolution_means{0.25, 0.75};
  std::vector<double> evolution_stds{0.1, 0.05};
  std::size_t evolution_steps = 500;
  std::size_t evolution_every = 25;
};
DdpgJob load_ddpg(const Config& config);
/// Writes actor.ckpt, critic.ckpt, training_log.csv, and either the cyber
/// trajectories or the swarm control/density profiles.
void run_ddpg(const DdpgJob& job, std::ostream& log);

struct EvaluateJob {
  RunSettings run;
  EnvSpec env;
  std::string policy;  // actor | table | optimal
  std::filesystem::path source;
  double action_low = -1.0;
  double action_high = 1.0;
  std::vector<double> start;  // weights, or empty for the default start
  double gamma = 0.9;
  std::size_t horizon = 500;
  std::size_t noise_rollouts = 1;
};
EvaluateJob load_evaluate(const Config& config);
/// Writes evaluation.csv and trajectory.csv.
void run_evaluate(const EvaluateJob& job, std::ostream& log);

struct BoundJob {
  RunSettings run;
  BoundInputs inputs;
  std::vector<double> taus;
  /// Lipschitz constants not given explicitly are probed on this env.
  std::optional<EnvSpec> env;
  std::size_t probe_pairs = 2000;
  std::size_t probe_resolution = 32;
  std::string lipschitz_transition_source = "config";
  std::string lipschitz_reward_source = "config";
  /// "config" or "environment" per grid-derived input.
  std::map<std::string, std::string> sources;
};
BoundJob load_bound(const Config& config);
/// Writes bound.csv (metric,value,source) and echoes it to `out`.
void run_bound(BoundJob job, std::ostream& out);

struct AcceptanceJob {
  RunSettings run;
  acceptance::Options options;
  bool fast = false;
};
AcceptanceJob load_acceptance(const Config& config);
/// Writes acceptance.csv; true when every criterion passed.
bool run_acceptance(const AcceptanceJob& job, std::ostream& out);

/// Loads and runs `command`; maps failures onto exit codes with a
/// diagnostic on `err`.
int dispatch(const std::string& command, const Config& config, std::ostream& out, std::ostream& err);

}  // namespace mfc::cli
