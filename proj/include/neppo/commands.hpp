#ifndef NEPPO_COMMANDS_HPP
#define NEPPO_COMMANDS_HPP

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "neppo/algorithm.hpp"
#include "neppo/baselines.hpp"
#include "neppo/errors.hpp"
#include "neppo/game_io.hpp"
#include "neppo/oracles.hpp"
#include "neppo/potential.hpp"
#include "neppo/trace_io.hpp"

namespace neppo {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitCapacity = 3 };

inline constexpr const char* kBuiltinToy = "builtin:toy";

/// A game file path, or "builtin:toy".
inline MarkovGame resolve_game(const std::string& source) {
  if (source == kBuiltinToy) return MarkovGame(toy_game());
  if (source.rfind("builtin:", 0) == 0) throw ParseError("unknown built-in game '" + source + "'");
  return load_game(source);
}

inline SolverMode parse_mode(const std::string& text) {
  if (text == "exact") return SolverMode::Exact;
  if (text == "iterative") return SolverMode::Iterative;
  throw ParseError("mode must be 'exact' or 'iterative', got '" + text + "'");
}

inline std::string mode_name(SolverMode mode) { return mode == SolverMode::Exact ? "exact" : "iterative"; }

/// Experiment settings: the NeppoConfig plus an optional starting point.
struct RunConfig {
  NeppoConfig neppo;
  std::optional<PotentialParams> initial_params;
};

/// Values given on the command line; each one replaces the file value.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<double> delta;
  std::optional<double> eta;
  std::optional<double> beta;
  std::optional<std::size_t> k1;
  std::optional<std::size_t> k2;
  std::optional<SolverMode> mode;
  std::optional<std::size_t> mc_episodes;
};

/// Parses a config object whose keys are NeppoConfig field names, plus
/// "initial_params". Unknown keys are rejected.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  RunConfig out;
  NeppoConfig& c = out.neppo;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "delta") c.delta = value.get<double>();
      else if (key == "eta") c.eta = value.get<double>();
      else if (key == "beta") c.beta = value.get<double>();
      else if (key == "k1") c.k1 = value.get<std::size_t>();
      else if (key == "k2") c.k2 = value.get<std::size_t>();
      else if (key == "outer_iterations") c.outer_iterations = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "coop_mode") c.coop_mode = parse_mode(value.get<std::string>());
      else if (key == "rl_mode") c.rl_mode = parse_mode(value.get<std::string>());
      else if (key == "coop_learning_rate") c.coop_learning_rate = value.get<double>();
      else if (key == "rl_learning_rate") c.rl_learning_rate = value.get<double>();
      else if (key == "solver_episodes") c.solver_episodes = value.get<std::size_t>();
      else if (key == "mc_episodes") c.mc_episodes = value.get<std::size_t>();
      else if (key == "mc_horizon") c.mc_horizon = value.get<std::size_t>();
      else if (key == "decay") c.decay = value.get<bool>();
      else if (key == "parallel") c.parallel = value.get<bool>();
      else if (key == "convergence_window") c.convergence_window = value.get<std::size_t>();
      else if (key == "initial_params") out.initial_params = params_from_json(value);
      else throw ParseError("unknown config key '" + key + "'");
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
  return out;
}

inline json config_to_json(const RunConfig& rc) {
  const NeppoConfig& c = rc.neppo;
  json j = {{"delta", c.delta},
            {"eta", c.eta},
            {"beta", c.beta},
            {"k1", c.k1},
            {"k2", c.k2},
            {"outer_iterations", c.outer_iterations},
            {"seed", c.seed},
            {"coop_mode", mode_name(c.coop_mode)},
            {"rl_mode", mode_name(c.rl_mode)},
            {"coop_learning_rate", c.coop_learning_rate},
            {"rl_learning_rate", c.rl_learning_rate},
            {"solver_episodes", c.solver_episodes},
            {"mc_episodes", c.mc_episodes},
            {"mc_horizon", c.mc_horizon},
            {"decay", c.decay},
            {"parallel", c.parallel},
            {"convergence_window", c.convergence_window}};
  if (rc.initial_params) j["initial_params"] = params_to_json(*rc.initial_params);
  return j;
}

inline RunConfig load_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& overrides) {
  RunConfig rc = path ? config_from_json(read_json_file(*path)) : RunConfig{};
  NeppoConfig& c = rc.neppo;
  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.iterations) c.outer_iterations = *overrides.iterations;
  if (overrides.delta) c.delta = *overrides.delta;
  if (overrides.eta) c.eta = *overrides.eta;
  if (overrides.beta) c.beta = *overrides.beta;
  if (overrides.k1) c.k1 = *overrides.k1;
  if (overrides.k2) c.k2 = *overrides.k2;
  if (overrides.mode) c.coop_mode = c.rl_mode = *overrides.mode;
  if (overrides.mc_episodes) c.mc_episodes = *overrides.mc_episodes;
  c.validate();
  return rc;
}

/// Starting w when the config gives none: equal player weights for a convex
/// combination; for two players this is w = 1/2.
inline PotentialParams default_initial_params(const MarkovGame& game) {
  const std::size_t n = game.num_players();
  return PotentialParams::convex(std::vector<double>(n - 1, 1.0 / static_cast<double>(n)));
}

/// Runs `body` and maps exceptions to exit codes, reporting on `err`.
inline int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const CapacityError& e) {
    err << "capacity error: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

inline std::filesystem::path prepare_out_dir(const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  return out_dir;
}

/// Runs NePPO and writes trace.csv, trace.jsonl, final_policy.json,
/// final_params.json and summary.json into out_dir.
inline int cmd_run(const std::string& game_source, const std::optional<std::filesystem::path>& config_file,
                   const std::filesystem::path& out_dir, const ConfigOverrides& overrides = {},
                   std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        const MarkovGame game = resolve_game(game_source);
        const RunConfig rc = load_config(config_file, overrides);
        const PotentialParams init = rc.initial_params.value_or(default_initial_params(game));

        const auto start = std::chrono::steady_clock::now();
        const NeppoResult result = run(game, init, rc.neppo);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const auto dir = prepare_out_dir(out_dir);
        const std::size_t p = result.params.dim();
        const std::size_t n = game.num_players();
        write_text_file(dir / "trace.csv", trace_to_csv(result.trace, p, n));
        write_text_file(dir / "trace.jsonl", trace_to_jsonl(result.trace, p, n));
        write_text_file(dir / "final_policy.json", policy_to_json(result.policy).dump(2) + "\n");
        write_text_file(dir / "final_params.json", params_to_json(result.params).dump(2) + "\n");

        const auto& last = result.trace.back();
        const double max_F = *std::max_element(last.F_hat.begin(), last.F_hat.end());
        const double final_regret = max_regret(game, result.policy);
        json summary = {{"iterations", result.trace.size()},
                        {"seed", rc.neppo.seed},
                        {"max_F", max_F},
                        {"regret_max", final_regret},
                        {"regret", regret(game, result.policy)},
                        {"trailing_mean_max_F", result.trailing_max_F(rc.neppo.convergence_window)},
                        {"convergence_window", rc.neppo.convergence_window},
                        {"final_w", result.params.w},
                        {"wall_time_seconds", wall},
                        {"config", config_to_json(rc)}};
        write_text_file(dir / "summary.json", summary.dump(2) + "\n");
        out << "iterations " << result.trace.size() << ", final w = [";
        for (std::size_t k = 0; k < p; ++k) out << (k ? ", " : "") << format_double(result.params.w[k]);
        out << "], max F = " << format_double(max_F) << ", max regret = " << format_double(final_regret) << '\n';
        return static_cast<int>(kExitOk);
      },
      err);
}

inline constexpr double kOracleTolerance = 1e-9;

/// Compares the exact pipeline with the closed-form toy curves over `grid`
/// (default 0.01..0.99) and writes oracle_check.csv. Exit 0 iff every
/// evaluated point matches within 1e-9 and every cooperative maximizer agrees.
inline int cmd_oracle_check(const std::filesystem::path& out_dir,
                            const std::optional<std::vector<double>>& grid = std::nullopt,
                            std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        const std::vector<double> points = grid.value_or(toy_oracle_grid());
        const auto rows = toy_oracle_comparison(points);
        const auto dir = prepare_out_dir(out_dir);
        write_text_file(dir / "oracle_check.csv", oracle_report_csv(rows));
        double worst = 0.0;
        std::size_t evaluated = 0;
        std::size_t skipped = 0;
        std::size_t argmax_mismatches = 0;
        for (const auto& r : rows) {
          if (r.tie) {
            ++skipped;
            continue;
          }
          ++evaluated;
          worst = std::max(worst, r.abs_error);
          if (!r.argmax_match) ++argmax_mismatches;
        }
        out << evaluated << " points compared, " << skipped << " tie points skipped, max abs error "
            << format_double(worst) << ", argmax mismatches " << argmax_mismatches << '\n';
        if (worst > kOracleTolerance || argmax_mismatches > 0) {
          err << "oracle mismatch\n";
          return static_cast<int>(kExitFailure);
        }
        return static_cast<int>(kExitOk);
      },
      err);
}

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names{"neppo", "mappo", "ippo", "uniform"};
  return names;
}

/// Runs the requested algorithms on one game and writes regret_table.csv and
/// regret_table.txt. An empty algorithm list is a usage error.
inline int cmd_baselines(const std::string& game_source, const std::optional<std::filesystem::path>& config_file,
                         const std::filesystem::path& out_dir, const std::vector<std::string>& algorithms,
                         const ConfigOverrides& overrides = {}, std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        if (algorithms.empty()) throw InvalidArgument("no algorithms requested");
        for (const auto& name : algorithms) {
          if (std::find(known_algorithms().begin(), known_algorithms().end(), name) == known_algorithms().end()) {
            throw InvalidArgument("unknown algorithm '" + name + "'");
          }
        }
        const MarkovGame game = resolve_game(game_source);
        const RunConfig rc = load_config(config_file, overrides);
        const NeppoConfig& c = rc.neppo;

        std::vector<std::pair<std::string, JointPolicy>> policies;
        for (const auto& name : algorithms) {
          if (name == "neppo") {
            policies.emplace_back("NePPO", run(game, rc.initial_params.value_or(default_initial_params(game)), c).policy);
          } else if (name == "mappo") {
            CounterRng rng(c.seed, StreamPurpose::Baseline, 1);
            policies.emplace_back("MAPPO", mappo_like(game, c.coop_budget(rng())));
          } else if (name == "ippo") {
            policies.emplace_back("IPPO", ippo_like(game, c.rl_budget(0), c.seed));
          } else {
            policies.emplace_back("Uniform", JointPolicy::uniform(game));
          }
        }
        const auto rows = regret_table(game, policies);
        const auto dir = prepare_out_dir(out_dir);
        write_text_file(dir / "regret_table.csv", regret_table_csv(rows));
        const std::string text = regret_table_text(rows);
        write_text_file(dir / "regret_table.txt", text);
        out << text;
        return static_cast<int>(kExitOk);
      },
      err);
}

}  // namespace neppo

#endif  // NEPPO_COMMANDS_HPP
