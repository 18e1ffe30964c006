// mfc: command-line runner over the mean-field control toolkit.
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfc/cli/commands.hpp"
#include "mfc/cli/config.hpp"
#include "mfc/error.hpp"

namespace {

struct Common {
  std::string config;
  std::string output;
  std::string seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", c.config, "configuration file");
  if (config_required) opt->required();
  cmd->add_option("-o,--output", c.output, "output directory (overrides [run] output)");
  cmd->add_option("-s,--seed", c.seed, "master seed (overrides [run] seed)");
  cmd->add_option("--set", c.overrides, "override section.key=value")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mfc::cli;
  CLI::App app{"mean-field control toolkit (version " + version() + ")"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  Common common;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"oracle", "exact value and Q tables on a simplex grid"},
      {"mfq", "tabular mean-field Q-learning"},
      {"ddpg", "actor-critic training on distribution states"},
      {"evaluate", "roll out a trained actor, Q table or the analytic swarm control"},
      {"bound", "error, episode-count and softmax-gap bounds"},
      {"acceptance", "run the acceptance suite"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), common, name != "acceptance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  mfc::cli::Config config;
  try {
    config = common.config.empty() ? Config::parse("", "<defaults>") : Config::load(common.config);
    if (!common.seed.empty()) config.set("run", "seed", common.seed);
    if (!common.output.empty()) config.set("run", "output", common.output);
    for (const auto& o : common.overrides) {
      const auto dot = o.find('.');
      const auto eq = o.find('=');
      if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
        std::cerr << "config error: --set expects section.key=value, got '" << o << "'\n";
        return kExitConfig;
      }
      config.set(o.substr(0, dot), o.substr(dot + 1, eq - dot - 1), o.substr(eq + 1));
    }
  } catch (const mfc::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return dispatch(command, config, std::cout, std::cerr);
}
