#ifndef NEPPO_SOLVERS_HPP
#define NEPPO_SOLVERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "neppo/evaluation.hpp"
#include "neppo/game.hpp"
#include "neppo/mdp.hpp"
#include "neppo/potential.hpp"
#include "neppo/rng.hpp"

namespace neppo {

enum class SolverMode { Exact, Iterative };

/// Budget of an inner solver.
///
/// Iterative mode runs `iterations` policy-gradient rounds with step
/// `learning_rate`. When `episodes` is positive, advantages and occupancies
/// are estimated from that many rollouts per round instead of computed
/// exactly. `clip` and `epochs` shape the clipped-ratio surrogate used by the
/// best-response solver.
struct SolverBudget {
  SolverMode mode = SolverMode::Exact;
  std::size_t iterations = 50;
  double learning_rate = 0.05;
  std::size_t episodes = 0;
  double clip = 0.2;
  std::size_t epochs = 4;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1) throw InvalidArgument("solver budget needs at least one iteration");
    if (mode == SolverMode::Iterative && !(learning_rate > 0.0)) {
      throw InvalidArgument("iterative solvers need a positive learning rate");
    }
    if (mode == SolverMode::Iterative && epochs < 1) throw InvalidArgument("epochs must be at least 1");
  }
};

/// Step size below which one softmax policy-gradient step cannot decrease the
/// value: 1/L with L = 8 R / (1 - gamma)^3, R = max |r|.
inline double stable_policy_gradient_step(double reward_scale, double discount) {
  if (reward_scale <= 0.0) return 1.0;
  const double c = 1.0 - discount;
  return c * c * c / (8.0 * reward_scale);
}

/// Quantities a softmax policy-gradient step needs in one MDP.
struct GradientStatistics {
  std::vector<double> advantage;  // [s * A + a]
  std::vector<double> occupancy;  // discounted, unnormalized
};

inline GradientStatistics exact_gradient_statistics(const FiniteMdp& mdp, std::span<const double> policy) {
  const auto values = state_values(mdp, policy);
  auto q = action_values(mdp, values);
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a) q[s * mdp.num_actions + a] -= values[s];
  return {std::move(q), discounted_occupancy(mdp, policy)};
}

/// Rollout estimate: Q(s,a) and V(s) are averages of the discounted
/// return-to-go over visits; unvisited pairs get zero advantage.
inline GradientStatistics sampled_gradient_statistics(const FiniteMdp& mdp, std::span<const double> policy,
                                                      std::size_t episodes, CounterRng rng) {
  const std::size_t S = mdp.num_states;
  const std::size_t A = mdp.num_actions;
  double r_max = 0.0;
  for (double r : mdp.reward) r_max = std::max(r_max, std::abs(r));
  std::size_t horizon = 1;
  if (mdp.discount > 0.0 && r_max > 0.0) {
    horizon = static_cast<std::size_t>(
        std::max(1.0, std::ceil(std::log(1e-6 * (1.0 - mdp.discount) / r_max) / std::log(mdp.discount))));
  }
  std::vector<double> q_sum(S * A, 0.0), q_count(S * A, 0.0), v_sum(S, 0.0), v_count(S, 0.0);
  std::vector<double> occupancy(S, 0.0);
  std::vector<std::size_t> states, actions;
  std::vector<double> rewards;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    states.clear();
    actions.clear();
    rewards.clear();
    std::size_t s = detail::sample_index(mdp.initial, rng.uniform());
    double weight = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::size_t a = detail::sample_index(policy.subspan(s * A, A), rng.uniform());
      states.push_back(s);
      actions.push_back(a);
      rewards.push_back(mdp.r(s, a));
      occupancy[s] += weight;
      weight *= mdp.discount;
      if (weight == 0.0) break;
      s = detail::sample_index(mdp.p(s, a), rng.uniform());
    }
    double to_go = 0.0;
    for (std::size_t t = states.size(); t-- > 0;) {
      to_go = rewards[t] + mdp.discount * to_go;
      q_sum[states[t] * A + actions[t]] += to_go;
      q_count[states[t] * A + actions[t]] += 1.0;
      v_sum[states[t]] += to_go;
      v_count[states[t]] += 1.0;
    }
  }
  GradientStatistics out{std::vector<double>(S * A, 0.0), std::move(occupancy)};
  for (double& d : out.occupancy) d /= static_cast<double>(episodes);
  for (std::size_t s = 0; s < S; ++s) {
    if (v_count[s] == 0.0) continue;
    const double v = v_sum[s] / v_count[s];
    for (std::size_t a = 0; a < A; ++a) {
      if (q_count[s * A + a] > 0.0) out.advantage[s * A + a] = q_sum[s * A + a] / q_count[s * A + a] - v;
    }
  }
  return out;
}

namespace detail {

inline constexpr double kLogitFloor = 1e-300;

inline std::vector<double> logits_from_policy(const TabularPolicy& policy) {
  std::vector<double> logits(policy.table().size());
  for (std::size_t k = 0; k < logits.size(); ++k) logits[k] = std::log(std::max(policy.table()[k], kLogitFloor));
  return logits;
}

inline TabularPolicy policy_from_logits(std::size_t player, std::size_t num_states, std::size_t num_actions,
                                        std::span<const double> logits) {
  std::vector<double> table(logits.size());
  for (std::size_t s = 0; s < num_states; ++s) {
    const auto row = softmax(logits.subspan(s * num_actions, num_actions));
    std::copy(row.begin(), row.end(), table.begin() + static_cast<std::ptrdiff_t>(s * num_actions));
  }
  return {player, num_states, num_actions, std::move(table)};
}

inline GradientStatistics gradient_statistics(const FiniteMdp& mdp, const TabularPolicy& policy,
                                              const SolverBudget& budget, CounterRng rng) {
  if (budget.episodes > 0) return sampled_gradient_statistics(mdp, policy.table(), budget.episodes, rng);
  return exact_gradient_statistics(mdp, policy.table());
}

/// Ascent on the clipped-ratio surrogate
///   sum_s d(s) sum_a pi_old(a|s) min(r A, clip(r, 1-eps, 1+eps) A),  r = pi/pi_old,
/// starting at pi_old. The first epoch is the exact softmax policy gradient.
inline void clipped_surrogate_ascent(std::vector<double>& logits, const TabularPolicy& old_policy,
                                     const GradientStatistics& stats, double learning_rate, double clip,
                                     std::size_t epochs) {
  const std::size_t S = old_policy.num_states();
  const std::size_t A = old_policy.num_actions();
  std::vector<double> grad(A);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t s = 0; s < S; ++s) {
      const std::span<double> theta(logits.data() + s * A, A);
      const auto pi = softmax(theta);
      double baseline = 0.0;
      std::vector<double> active(A, 0.0);
      for (std::size_t a = 0; a < A; ++a) {
        const double adv = stats.advantage[s * A + a];
        const double old_p = old_policy.prob(s, a);
        const double ratio = old_p > 0.0 ? pi[a] / old_p : 1.0;
        const bool clipped = (adv > 0.0 && ratio > 1.0 + clip) || (adv < 0.0 && ratio < 1.0 - clip);
        if (!clipped) active[a] = pi[a] * adv;
        baseline += active[a];
      }
      for (std::size_t b = 0; b < A; ++b) grad[b] = stats.occupancy[s] * (active[b] - pi[b] * baseline);
      for (std::size_t b = 0; b < A; ++b) theta[b] += learning_rate * grad[b];
    }
  }
}

/// Plain softmax policy-gradient step: theta += lr * d(s) pi(a|s) A(s,a).
inline void policy_gradient_step(std::vector<double>& logits, const TabularPolicy& policy,
                                 const GradientStatistics& stats, double learning_rate) {
  const std::size_t A = policy.num_actions();
  for (std::size_t s = 0; s < policy.num_states(); ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      logits[s * A + a] += learning_rate * stats.occupancy[s] * policy.prob(s, a) * stats.advantage[s * A + a];
    }
  }
}

inline JointPolicy joint_from_actions(const MarkovGame& game, std::span<const std::size_t> joint_per_state) {
  std::vector<TabularPolicy> policies;
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    std::vector<std::size_t> actions(game.num_states());
    for (std::size_t s = 0; s < game.num_states(); ++s) actions[s] = game.joint_actions().action_of(joint_per_state[s], i);
    policies.push_back(TabularPolicy::deterministic(i, game.action_count(i), actions));
  }
  return JointPolicy(std::move(policies));
}

}  // namespace detail

/// Cooperative solver on an explicit shared reward table.
///
/// Exact: global maximizer of the shared value from dynamic programming on
/// the joint-action MDP (lowest joint index on ties); warm_start is ignored.
/// Iterative: `iterations` rounds of sequential softmax policy-gradient
/// ascent, players updated in ascending order, starting from warm_start.
inline JointPolicy coop_solve(const MarkovGame& game, const RewardTable& shared_reward,
                              const JointPolicy& warm_start, const SolverBudget& budget) {
  budget.validate();
  if (budget.mode == SolverMode::Exact) {
    check_exact_capacity(game);
    const OptimalControl control = solve_optimal(joint_mdp(game, shared_reward));
    return detail::joint_from_actions(game, control.actions);
  }
  check_shapes(game, warm_start);
  check_exact_capacity(game);
  std::vector<TabularPolicy> policies = warm_start.policies();
  std::vector<std::vector<double>> logits;
  for (const auto& p : policies) logits.push_back(detail::logits_from_policy(p));
  const CounterRng rng(budget.seed);
  for (std::size_t round = 0; round < budget.iterations; ++round) {
    for (std::size_t i = 0; i < game.num_players(); ++i) {
      const JointPolicy profile(policies);
      const FiniteMdp mdp = induced_mdp(game, shared_reward, profile, i);
      const auto stats = detail::gradient_statistics(mdp, policies[i], budget,
                                                     rng.split(round * game.num_players() + i));
      detail::policy_gradient_step(logits[i], policies[i], stats, budget.learning_rate);
      policies[i] = detail::policy_from_logits(i, game.num_states(), game.action_count(i), logits[i]);
    }
  }
  return JointPolicy(std::move(policies));
}

/// CoopGameSolver: (approximate) maximizer of Phi_w.
inline JointPolicy coop_game_solver(const JointPolicy& warm_start, const PotentialParams& params,
                                    const MarkovGame& game, const SolverBudget& budget) {
  return coop_solve(game, potential_reward_table(params, game), warm_start, budget);
}

/// RLSolver: (approximate) best response of warm_start.player() to the other
/// policies in `others` under `reward`.
///
/// Exact: optimal deterministic policy of the induced MDP. Iterative:
/// `iterations` rounds of clipped-ratio surrogate ascent from warm_start.
inline TabularPolicy rl_solver(const TabularPolicy& warm_start, const JointPolicy& others,
                               const RewardTable& reward, const MarkovGame& game, const SolverBudget& budget) {
  budget.validate();
  const std::size_t player = warm_start.player();
  if (player >= game.num_players()) throw InvalidArgument("player index out of range");
  check_exact_capacity(game);
  const JointPolicy profile = others.with_policy(warm_start);
  if (budget.mode == SolverMode::Exact) {
    const OptimalControl control = solve_optimal(induced_mdp(game, reward, profile, player));
    return TabularPolicy::deterministic(player, game.action_count(player), control.actions);
  }
  const FiniteMdp mdp = induced_mdp(game, reward, profile, player);
  TabularPolicy policy = warm_start;
  std::vector<double> logits = detail::logits_from_policy(policy);
  const CounterRng rng(budget.seed);
  for (std::size_t round = 0; round < budget.iterations; ++round) {
    const auto stats = detail::gradient_statistics(mdp, policy, budget, rng.split(round));
    detail::clipped_surrogate_ascent(logits, policy, stats, budget.learning_rate, budget.clip, budget.epochs);
    policy = detail::policy_from_logits(player, game.num_states(), game.action_count(player), logits);
  }
  return policy;
}

/// RLSolver on the player's own reward r_i.
inline TabularPolicy rl_solver(const TabularPolicy& warm_start, const JointPolicy& others, const MarkovGame& game,
                               const SolverBudget& budget) {
  return rl_solver(warm_start, others, game.reward_table(warm_start.player()), game, budget);
}

}  // namespace neppo

#endif  // NEPPO_SOLVERS_HPP
