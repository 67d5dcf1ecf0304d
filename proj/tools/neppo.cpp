#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "neppo/commands.hpp"

namespace {

struct CommonOptions {
  std::string game = neppo::kBuiltinToy;
  std::string config;
  std::string out = "out";
  std::string mode;
  neppo::ConfigOverrides overrides;
};

void add_experiment_flags(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--game", o.game, "game file or builtin:toy")->capture_default_str();
  cmd.add_option("--config", o.config, "JSON config with NeppoConfig field names");
  cmd.add_option("--out", o.out, "output directory")->capture_default_str();
  cmd.add_option("--seed", o.overrides.seed, "master seed");
  cmd.add_option("--iterations", o.overrides.iterations, "outer iterations");
  cmd.add_option("--delta", o.overrides.delta, "perturbation radius");
  cmd.add_option("--eta", o.overrides.eta, "outer step size");
  cmd.add_option("--beta", o.overrides.beta, "log-sum-exp sharpness");
  cmd.add_option("--k1", o.overrides.k1, "cooperative solver iterations");
  cmd.add_option("--k2", o.overrides.k2, "best-response solver iterations");
  cmd.add_option("--mode", o.mode, "inner solvers")->check(CLI::IsMember({"exact", "iterative"}));
  cmd.add_option("--mc-episodes", o.overrides.mc_episodes, "rollouts per F_i evaluation (0 = exact)");
}

std::optional<std::filesystem::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-potential policy optimization"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "run NePPO and write the trace");
  add_experiment_flags(*run, run_opts);

  std::string oracle_out = "out";
  std::vector<double> oracle_w;
  auto* oracle = app.add_subcommand("oracle-check", "compare the exact pipeline with the toy closed forms");
  oracle->add_option("--out", oracle_out, "output directory")->capture_default_str();
  oracle->add_option("--w", oracle_w, "grid points (default 0.01..0.99)");

  CommonOptions base_opts;
  std::vector<std::string> algorithms{"neppo", "mappo", "ippo", "uniform"};
  auto* baselines = app.add_subcommand("baselines", "regret table of NePPO and the baselines");
  add_experiment_flags(*baselines, base_opts);
  baselines->add_option("--algorithms", algorithms, "subset of neppo,mappo,ippo,uniform")
      ->delimiter(',')
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : neppo::kExitUsage;
  }

  try {
    if (!run_opts.mode.empty()) run_opts.overrides.mode = neppo::parse_mode(run_opts.mode);
    if (!base_opts.mode.empty()) base_opts.overrides.mode = neppo::parse_mode(base_opts.mode);
  } catch (const neppo::ParseError& e) {
    std::cerr << e.what() << '\n';
    return neppo::kExitUsage;
  }

  if (*run) return neppo::cmd_run(run_opts.game, optional_path(run_opts.config), run_opts.out, run_opts.overrides);
  if (*oracle) {
    std::optional<std::vector<double>> grid;
    if (!oracle_w.empty()) grid = oracle_w;
    return neppo::cmd_oracle_check(oracle_out, grid);
  }
  // "--algorithms ''" yields one empty name; treat it as no algorithms.
  std::erase(algorithms, std::string());
  return neppo::cmd_baselines(base_opts.game, optional_path(base_opts.config), base_opts.out, algorithms,
                              base_opts.overrides);
}
