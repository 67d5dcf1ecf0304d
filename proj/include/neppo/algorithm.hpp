#ifndef NEPPO_ALGORITHM_HPP
#define NEPPO_ALGORITHM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <span>
#include <vector>

#include "neppo/evaluation.hpp"
#include "neppo/game.hpp"
#include "neppo/potential.hpp"
#include "neppo/rng.hpp"
#include "neppo/solvers.hpp"

namespace neppo {

/// Hyperparameters of the outer loop and its inner solvers.
struct NeppoConfig {
  double delta = 0.05;  // zeroth-order radius
  double eta = 0.05;    // outer learning rate
  double beta = 10.0;   // log-sum-exp sharpness
  std::size_t k1 = 50;  // cooperative solver budget (iterative mode)
  std::size_t k2 = 50;  // best-response solver budget (iterative mode)
  std::size_t outer_iterations = 300;
  std::uint64_t seed = 0;
  SolverMode coop_mode = SolverMode::Exact;
  SolverMode rl_mode = SolverMode::Exact;
  double coop_learning_rate = 0.05;
  double rl_learning_rate = 0.5;
  std::size_t solver_episodes = 0;  // > 0 selects rollout-estimated policy gradients
  std::size_t mc_episodes = 0;      // 0 = exact evaluation of F_i
  std::size_t mc_horizon = 0;       // 0 = derived from the truncation tolerance
  bool decay = false;               // delta_t = delta / sqrt(t + 1), eta_t = eta / sqrt(t + 1)
  bool parallel = false;            // run the two perturbation pipelines concurrently
  std::size_t convergence_window = 20;

  void validate() const {
    if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
    if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
    if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
    if (outer_iterations < 1) throw InvalidArgument("outer_iterations must be at least 1");
    coop_budget(0).validate();
    rl_budget(0).validate();
  }

  SolverBudget coop_budget(std::uint64_t stream_seed) const {
    return {coop_mode, k1, coop_learning_rate, solver_episodes, 0.2, 1, stream_seed};
  }
  SolverBudget rl_budget(std::uint64_t stream_seed) const {
    return {rl_mode, k2, rl_learning_rate, solver_episodes, 0.2, 4, stream_seed};
  }
};

/// How F_i's four value quantities are obtained.
struct Evaluation {
  std::size_t episodes = 0;  // 0 = exact
  std::size_t horizon = 0;
  std::uint64_t seed = 0;

  static Evaluation exact() { return {}; }
  static Evaluation monte_carlo(std::size_t episodes, std::uint64_t seed, std::size_t horizon = 0) {
    return {episodes, horizon, seed};
  }
};

/// F_i together with the four values it is built from:
///   F_i = (phi_at_eq - phi_at_dev) - (j_at_eq - j_at_dev).
struct FiReport {
  std::vector<double> F;
  std::vector<double> phi_at_eq;   // Phi_w(pi*)
  std::vector<double> phi_at_dev;  // Phi_w(br_i, pi*_{-i})
  std::vector<double> j_at_eq;     // J_i(pi*)
  std::vector<double> j_at_dev;    // J_i(br_i, pi*_{-i})

  double potential_change(std::size_t i) const { return phi_at_eq[i] - phi_at_dev[i]; }
  double value_change(std::size_t i) const { return j_at_eq[i] - j_at_dev[i]; }
  double max_F() const { return *std::max_element(F.begin(), F.end()); }
};

inline FiReport compute_F(const PotentialParams& params, const MarkovGame& game, const JointPolicy& coop_policy,
                          std::span<const TabularPolicy> br_policies, const Evaluation& evaluation = {}) {
  check_shapes(game, coop_policy);
  const std::size_t n = game.num_players();
  if (br_policies.size() != n) throw InvalidArgument("need one best-response policy per player");

  std::vector<RewardTable> channels = game.reward_tables();
  channels.push_back(potential_reward_table(params, game));

  // Monte-Carlo mode reuses one stream for every evaluation (common random numbers).
  const CounterRng stream(evaluation.seed, StreamPurpose::Evaluation, 0);
  auto evaluate = [&](const JointPolicy& pi) {
    if (evaluation.episodes == 0) return evaluate_channels(game, pi, channels);
    return evaluate_mc_channels(game, pi, channels, evaluation.episodes, evaluation.horizon, stream).mean;
  };

  const auto at_eq = evaluate(coop_policy);
  FiReport report{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                  std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    if (br_policies[i].player() != i) throw InvalidArgument("best-response policies must be ordered by player");
    const auto at_dev = evaluate(coop_policy.with_policy(br_policies[i]));
    report.phi_at_eq[i] = at_eq[n];
    report.phi_at_dev[i] = at_dev[n];
    report.j_at_eq[i] = at_eq[i];
    report.j_at_dev[i] = at_dev[i];
    report.F[i] = (report.phi_at_eq[i] - report.phi_at_dev[i]) - (report.j_at_eq[i] - report.j_at_dev[i]);
  }
  return report;
}

/// (1/beta) log sum_i exp(beta F_i), evaluated with the maximum factored out.
inline double smooth_max(std::span<const double> F, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (F.empty()) throw InvalidArgument("smooth_max of an empty vector");
  const double m = *std::max_element(F.begin(), F.end());
  double total = 0.0;
  for (double f : F) total += std::exp(beta * (f - m));
  return m + std::log(total) / beta;
}

/// Two-point estimate (p / 2 delta) (f_hat - f_check) u.
inline std::vector<double> zeroth_order_gradient(double f_hat, double f_check, std::span<const double> u,
                                                 double delta, std::size_t p) {
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  const double scale = static_cast<double>(p) / (2.0 * delta) * (f_hat - f_check);
  std::vector<double> g(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) g[k] = scale * u[k];
  return g;
}

/// Uniform direction on the unit sphere in R^p (normalized Gaussian vector).
inline std::vector<double> sample_unit_sphere(std::size_t p, CounterRng& rng) {
  if (p == 0) throw InvalidArgument("sphere dimension must be at least 1");
  std::vector<double> u(p);
  for (;;) {
    double norm_sq = 0.0;
    for (double& x : u) {
      x = rng.normal();
      norm_sq += x * x;
    }
    if (norm_sq > 0.0) {
      const double norm = std::sqrt(norm_sq);
      for (double& x : u) x /= norm;
      return u;
    }
  }
}

/// pi^{*,Phi_w}, every player's best response to it, and the resulting F_i,
/// all computed with the exact solvers.
struct ExactPotentialSolution {
  JointPolicy coop;
  std::vector<TabularPolicy> best_responses;
  FiReport report;
};

inline ExactPotentialSolution solve_potential_exact(const MarkovGame& game, const PotentialParams& params) {
  const SolverBudget exact{SolverMode::Exact, 1, 1.0};
  ExactPotentialSolution out;
  out.coop = coop_game_solver(JointPolicy::uniform(game), params, game, exact);
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    out.best_responses.push_back(best_response_exact(game, i, out.coop).policy);
  }
  out.report = compute_F(params, game, out.coop, out.best_responses);
  return out;
}

/// One row of the optimization trace.
struct IterationTrace {
  std::size_t iteration = 0;
  std::vector<double> w_before;
  std::vector<double> w_after;
  std::vector<double> u;
  double f_tilde_hat = 0.0;
  double f_tilde_check = 0.0;
  std::vector<double> F_hat;  // F_i at w + delta u
  std::vector<double> dJ;     // J_i(pi*) - J_i(br_i, pi*_{-i}) at w + delta u
  std::vector<double> dPhi;   // Phi(pi*) - Phi(br_i, pi*_{-i}) at w + delta u
  double regret_max = 0.0;    // of the current cooperative policy
  std::vector<double> J;      // J_i of the current cooperative policy
};

struct NeppoResult {
  JointPolicy policy;
  PotentialParams params;
  std::vector<IterationTrace> trace;

  /// Mean of max_i F_i over the last `window` iterations.
  double trailing_max_F(std::size_t window) const {
    if (trace.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t k = std::min(std::max<std::size_t>(window, 1), trace.size());
    double total = 0.0;
    for (std::size_t t = trace.size() - k; t < trace.size(); ++t) {
      total += *std::max_element(trace[t].F_hat.begin(), trace[t].F_hat.end());
    }
    return total / static_cast<double>(k);
  }
};

namespace detail {

struct PerturbedSolve {
  JointPolicy coop;
  std::vector<TabularPolicy> best_responses;
  FiReport report;
};

inline PerturbedSolve solve_perturbation(const MarkovGame& game, const PotentialParams& params,
                                         const JointPolicy& coop_warm, const std::vector<TabularPolicy>& br_warm,
                                         const NeppoConfig& config, std::uint64_t stream_seed,
                                         std::uint64_t eval_seed) {
  PerturbedSolve out;
  out.coop = coop_game_solver(coop_warm, params, game, config.coop_budget(stream_seed));
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    out.best_responses.push_back(
        rl_solver(br_warm[i], out.coop, game, config.rl_budget(detail::splitmix64(stream_seed + i + 1))));
  }
  const Evaluation evaluation = config.mc_episodes == 0
                                    ? Evaluation::exact()
                                    : Evaluation::monte_carlo(config.mc_episodes, eval_seed, config.mc_horizon);
  out.report = compute_F(params, game, out.coop, out.best_responses, evaluation);
  return out;
}

}  // namespace detail

/// Near-potential policy optimization.
///
/// Each outer iteration samples a direction u, solves the cooperative game
/// and all best responses at w + delta u and w - delta u (both warm-started
/// from the persistent policies, which then take the w + delta u solutions),
/// smooths max_i F_i on both sides and takes a projected two-point
/// zeroth-order step on w. Deterministic given config.seed.
inline NeppoResult run(const MarkovGame& game, const PotentialParams& initial_params, const NeppoConfig& config) {
  config.validate();
  check_params(initial_params, game.num_players(), game.num_states());

  NeppoResult result{JointPolicy::uniform(game), project(initial_params), {}};
  std::vector<TabularPolicy> br = JointPolicy::uniform(game).policies();
  const std::size_t p = result.params.dim();
  result.trace.reserve(config.outer_iterations);

  for (std::size_t t = 0; t < config.outer_iterations; ++t) {
    const double scale = config.decay ? 1.0 / std::sqrt(static_cast<double>(t + 1)) : 1.0;
    const double delta = config.delta * scale;
    const double eta = config.eta * scale;

    IterationTrace row;
    row.iteration = t;
    row.w_before = result.params.w;
    if (p > 0) {
      CounterRng direction_rng(config.seed, StreamPurpose::Direction, t);
      row.u = sample_unit_sphere(p, direction_rng);
    }
    const auto [hat_params, check_params_] = perturb(result.params, row.u, delta);

    const std::uint64_t hat_seed = CounterRng(config.seed, StreamPurpose::SolverHat, t)();
    const std::uint64_t check_seed = CounterRng(config.seed, StreamPurpose::SolverCheck, t)();
    const std::uint64_t hat_eval = CounterRng(config.seed, StreamPurpose::EvalHat, t)();
    const std::uint64_t check_eval = CounterRng(config.seed, StreamPurpose::EvalCheck, t)();

    detail::PerturbedSolve hat;
    detail::PerturbedSolve check;
    if (config.parallel) {
      auto pending = std::async(std::launch::async, [&, &cp = check_params_] {
        return detail::solve_perturbation(game, cp, result.policy, br, config, check_seed, check_eval);
      });
      hat = detail::solve_perturbation(game, hat_params, result.policy, br, config, hat_seed, hat_eval);
      check = pending.get();
    } else {
      check = detail::solve_perturbation(game, check_params_, result.policy, br, config, check_seed, check_eval);
      hat = detail::solve_perturbation(game, hat_params, result.policy, br, config, hat_seed, hat_eval);
    }

    result.policy = hat.coop;
    br = hat.best_responses;

    row.f_tilde_hat = smooth_max(hat.report.F, config.beta);
    row.f_tilde_check = smooth_max(check.report.F, config.beta);
    if (p > 0) {
      const auto g = zeroth_order_gradient(row.f_tilde_hat, row.f_tilde_check, row.u, delta, p);
      PotentialParams next = result.params;
      for (std::size_t k = 0; k < p; ++k) next.w[k] -= eta * g[k];
      result.params = project(next);
    }
    row.w_after = result.params.w;
    row.F_hat = hat.report.F;
    for (std::size_t i = 0; i < game.num_players(); ++i) {
      row.dJ.push_back(hat.report.value_change(i));
      row.dPhi.push_back(hat.report.potential_change(i));
    }
    row.J = evaluate_exact(game, result.policy);
    row.regret_max = max_regret(game, result.policy);
    result.trace.push_back(std::move(row));
  }
  return result;
}

}  // namespace neppo

#endif  // NEPPO_ALGORITHM_HPP
