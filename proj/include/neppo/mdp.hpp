#ifndef NEPPO_MDP_HPP
#define NEPPO_MDP_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "neppo/game.hpp"

namespace neppo {

/// Dense finite MDP. Used both for the joint-action MDP of a cooperative game
/// and for the single-agent MDP a player faces when the others are frozen.
struct FiniteMdp {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> reward;      // [s * A + a]
  std::vector<double> transition;  // [(s * A + a) * S + s']
  double discount = 0.0;
  std::vector<double> initial;

  double r(std::size_t s, std::size_t a) const { return reward[s * num_actions + a]; }
  std::span<const double> p(std::size_t s, std::size_t a) const {
    return {transition.data() + (s * num_actions + a) * num_states, num_states};
  }
};

/// Joint-action MDP of the game under a shared reward table.
inline FiniteMdp joint_mdp(const MarkovGame& game, const RewardTable& shared_reward) {
  if (shared_reward.size() != game.table_entries()) throw InvalidArgument("reward table has wrong size");
  return {game.num_states(), game.num_joint_actions(), shared_reward, game.transition_table(),
          game.discount(), game.initial_distribution()};
}

/// MDP faced by `player` when every other player follows `profile`.
/// The player's own entry in `profile` is ignored.
inline FiniteMdp induced_mdp(const MarkovGame& game, const RewardTable& reward,
                             const JointPolicy& profile, std::size_t player) {
  check_shapes(game, profile);
  if (reward.size() != game.table_entries()) throw InvalidArgument("reward table has wrong size");
  const auto& space = game.joint_actions();
  const std::size_t S = game.num_states();
  const std::size_t A = game.action_count(player);
  FiniteMdp mdp{S, A, std::vector<double>(S * A, 0.0), std::vector<double>(S * A * S, 0.0),
                game.discount(), game.initial_distribution()};
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t joint = 0; joint < space.size(); ++joint) {
      double weight = 1.0;
      for (std::size_t j = 0; j < game.num_players(); ++j) {
        if (j != player) weight *= profile[j].prob(s, space.action_of(joint, j));
      }
      if (weight == 0.0) continue;
      const std::size_t a = space.action_of(joint, player);
      mdp.reward[s * A + a] += weight * reward[s * space.size() + joint];
      const auto next = game.transition(s, joint);
      double* row = mdp.transition.data() + (s * A + a) * S;
      for (std::size_t k = 0; k < S; ++k) row[k] += weight * next[k];
    }
  }
  return mdp;
}

namespace detail {

/// I - gamma * P_pi for a stochastic policy table [s * A + a].
inline Eigen::MatrixXd policy_system(const FiniteMdp& mdp, std::span<const double> policy) {
  const std::size_t S = mdp.num_states;
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
  if (mdp.discount == 0.0) return m;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      const double pa = policy[s * mdp.num_actions + a];
      if (pa == 0.0) continue;
      const auto next = mdp.p(s, a);
      for (std::size_t k = 0; k < S; ++k) {
        m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) -= mdp.discount * pa * next[k];
      }
    }
  }
  return m;
}

inline Eigen::VectorXd policy_reward(const FiniteMdp& mdp, std::span<const double> policy) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mdp.num_states));
  for (std::size_t s = 0; s < mdp.num_states; ++s)
    for (std::size_t a = 0; a < mdp.num_actions; ++a)
      r(static_cast<Eigen::Index>(s)) += policy[s * mdp.num_actions + a] * mdp.r(s, a);
  return r;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace detail

/// Exact state values of a stochastic policy: V = (I - gamma P_pi)^{-1} r_pi.
inline std::vector<double> state_values(const FiniteMdp& mdp, std::span<const double> policy) {
  const Eigen::VectorXd r = detail::policy_reward(mdp, policy);
  if (mdp.discount == 0.0) return detail::to_std(r);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(detail::policy_system(mdp, policy));
  const Eigen::VectorXd v = lu.solve(r);
  if (!v.allFinite()) throw std::runtime_error("policy evaluation failed");
  return detail::to_std(v);
}

inline double start_value(const FiniteMdp& mdp, std::span<const double> values) {
  double j = 0.0;
  for (std::size_t s = 0; s < mdp.num_states; ++s) j += mdp.initial[s] * values[s];
  return j;
}

/// Q(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) V(s').
inline std::vector<double> action_values(const FiniteMdp& mdp, std::span<const double> values) {
  std::vector<double> q(mdp.num_states * mdp.num_actions);
  for (std::size_t s = 0; s < mdp.num_states; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions; ++a) {
      double next = 0.0;
      if (mdp.discount != 0.0) {
        const auto p = mdp.p(s, a);
        for (std::size_t k = 0; k < mdp.num_states; ++k) next += p[k] * values[k];
      }
      q[s * mdp.num_actions + a] = mdp.r(s, a) + mdp.discount * next;
    }
  }
  return q;
}

/// Unnormalized discounted state occupancy sum_t gamma^t Pr(s_t = s).
/// Entries sum to 1 / (1 - gamma).
inline std::vector<double> discounted_occupancy(const FiniteMdp& mdp, std::span<const double> policy) {
  Eigen::VectorXd rho(static_cast<Eigen::Index>(mdp.num_states));
  for (std::size_t s = 0; s < mdp.num_states; ++s) rho(static_cast<Eigen::Index>(s)) = mdp.initial[s];
  if (mdp.discount == 0.0) return detail::to_std(rho);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(detail::policy_system(mdp, policy));
  return detail::to_std(lu.transpose().solve(rho));
}

/// Deterministic policy table with one action per state.
inline std::vector<double> deterministic_table(std::size_t num_actions, std::span<const std::size_t> actions) {
  std::vector<double> table(actions.size() * num_actions, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) table[s * num_actions + actions[s]] = 1.0;
  return table;
}

struct OptimalControl {
  std::vector<std::size_t> actions;  // one per state
  std::vector<double> values;        // exact values of `actions`
  double bellman_residual = 0.0;     // of the value-iteration phase
};

/// Optimal deterministic policy with lowest-index tie-breaking.
///
/// Value iteration runs until the Bellman residual is at most `tolerance`;
/// the greedy policy is then polished by exact policy iteration, which only
/// switches an action on a strict improvement larger than the tie margin.
inline OptimalControl solve_optimal(const FiniteMdp& mdp, double tolerance = 1e-10,
                                    std::size_t max_sweeps = 200'000) {
  const std::size_t S = mdp.num_states;
  const std::size_t A = mdp.num_actions;
  std::vector<double> v(S, 0.0);
  std::vector<double> q;
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t sweep = 0; sweep < max_sweeps && residual > tolerance; ++sweep) {
    q = action_values(mdp, v);
    residual = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const double best = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(s * A),
                                            q.begin() + static_cast<std::ptrdiff_t>((s + 1) * A));
      residual = std::max(residual, std::abs(best - v[s]));
      v[s] = best;
    }
    if (mdp.discount == 0.0) residual = 0.0;
  }
  q = action_values(mdp, v);

  auto tie_margin = [](double x) { return 1e-12 * std::max(1.0, std::abs(x)); };

  OptimalControl out;
  out.bellman_residual = residual;
  out.actions.assign(S, 0);
  for (std::size_t s = 0; s < S; ++s) {
    double best = q[s * A];
    for (std::size_t a = 1; a < A; ++a) best = std::max(best, q[s * A + a]);
    for (std::size_t a = 0; a < A; ++a) {
      if (q[s * A + a] >= best - tie_margin(best)) {
        out.actions[s] = a;
        break;
      }
    }
  }

  for (std::size_t round = 0; round < 10'000; ++round) {
    out.values = state_values(mdp, deterministic_table(A, out.actions));
    q = action_values(mdp, out.values);
    bool changed = false;
    for (std::size_t s = 0; s < S; ++s) {
      const double current = q[s * A + out.actions[s]];
      double best = current;
      std::size_t best_a = out.actions[s];
      for (std::size_t a = 0; a < A; ++a) {
        if (q[s * A + a] > best + tie_margin(best)) {
          best = q[s * A + a];
          best_a = a;
        }
      }
      if (best_a != out.actions[s]) {
        // Prefer the lowest index among the actions that tie with the winner.
        for (std::size_t a = 0; a < A; ++a) {
          if (q[s * A + a] >= best - tie_margin(best)) {
            best_a = a;
            break;
          }
        }
        out.actions[s] = best_a;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return out;
}

}  // namespace neppo

#endif  // NEPPO_MDP_HPP
