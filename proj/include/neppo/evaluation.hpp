#ifndef NEPPO_EVALUATION_HPP
#define NEPPO_EVALUATION_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "neppo/game.hpp"
#include "neppo/mdp.hpp"
#include "neppo/rng.hpp"

namespace neppo {

/// Expected discounted return of `pi` under each reward channel.
///
/// Solves (I - gamma P_pi) V = r_pi for all channels with one factorization
/// and averages over the initial distribution.
inline std::vector<double> evaluate_channels(const MarkovGame& game, const JointPolicy& pi,
                                             std::span<const RewardTable> channels) {
  check_shapes(game, pi);
  check_exact_capacity(game);
  const auto& space = game.joint_actions();
  const auto S = static_cast<Eigen::Index>(game.num_states());
  const auto C = static_cast<Eigen::Index>(channels.size());
  for (const auto& ch : channels) {
    if (ch.size() != game.table_entries()) throw InvalidArgument("reward channel has wrong size");
  }

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(S, C);
  for (Eigen::Index s = 0; s < S; ++s) {
    const auto su = static_cast<std::size_t>(s);
    for (std::size_t joint = 0; joint < space.size(); ++joint) {
      const double p = pi.joint_prob(space, su, joint);
      if (p == 0.0) continue;
      for (Eigen::Index c = 0; c < C; ++c) {
        rhs(s, c) += p * channels[static_cast<std::size_t>(c)][su * space.size() + joint];
      }
      if (game.discount() != 0.0) {
        const auto next = game.transition(su, joint);
        for (Eigen::Index k = 0; k < S; ++k) system(s, k) -= game.discount() * p * next[static_cast<std::size_t>(k)];
      }
    }
  }
  Eigen::MatrixXd values = rhs;
  if (game.discount() != 0.0) {
    values = Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(rhs);
    if (!values.allFinite()) throw std::runtime_error("policy evaluation produced non-finite values");
  }
  std::vector<double> out(channels.size(), 0.0);
  for (Eigen::Index c = 0; c < C; ++c) {
    for (Eigen::Index s = 0; s < S; ++s) {
      out[static_cast<std::size_t>(c)] += game.initial_distribution()[static_cast<std::size_t>(s)] * values(s, c);
    }
  }
  return out;
}

/// J_i(pi) for every player, computed exactly.
inline ValueVector evaluate_exact(const MarkovGame& game, const JointPolicy& pi) {
  return evaluate_channels(game, pi, game.reward_tables());
}

/// Rollout horizon whose truncation bias gamma^H r_max / (1 - gamma) is below `tolerance`.
inline std::size_t default_horizon(const MarkovGame& game, double tolerance = 1e-6) {
  const double gamma = game.discount();
  const double r_max = game.max_abs_reward();
  if (gamma == 0.0 || r_max == 0.0) return 1;
  const double h = std::ceil(std::log(tolerance * (1.0 - gamma) / r_max) / std::log(gamma));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(1.0, h)));
}

/// Upper bound on the bias introduced by truncating rollouts at `horizon`.
inline double truncation_bound(const MarkovGame& game, std::size_t horizon) {
  const double gamma = game.discount();
  return std::pow(gamma, static_cast<double>(horizon)) * game.max_abs_reward() / (1.0 - gamma);
}

struct MonteCarloEstimate {
  std::vector<double> mean;
  std::vector<double> standard_error;
};

namespace detail {

inline std::size_t sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  // Rounding left u above the cumulative sum; take the last supported index.
  for (std::size_t k = probs.size(); k-- > 0;)
    if (probs[k] > 0.0) return k;
  return probs.size() - 1;
}

}  // namespace detail

/// Monte-Carlo estimate of every channel's return from `episodes` rollouts
/// truncated at `horizon` steps.
inline MonteCarloEstimate evaluate_mc_channels(const MarkovGame& game, const JointPolicy& pi,
                                               std::span<const RewardTable> channels,
                                               std::size_t episodes, std::size_t horizon,
                                               CounterRng rng) {
  check_shapes(game, pi);
  if (episodes == 0) throw InvalidArgument("episodes must be at least 1");
  if (horizon == 0) horizon = default_horizon(game);
  const auto& space = game.joint_actions();
  const std::size_t C = channels.size();
  std::vector<double> sum(C, 0.0);
  std::vector<double> sum_sq(C, 0.0);
  std::vector<double> ret(C);
  std::vector<std::size_t> actions(game.num_players());
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    std::fill(ret.begin(), ret.end(), 0.0);
    std::size_t s = detail::sample_index(game.initial_distribution(), rng.uniform());
    double weight = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      for (std::size_t i = 0; i < game.num_players(); ++i) {
        actions[i] = detail::sample_index(pi[i].row(s), rng.uniform());
      }
      const std::size_t joint = space.encode(actions);
      for (std::size_t c = 0; c < C; ++c) ret[c] += weight * channels[c][s * space.size() + joint];
      weight *= game.discount();
      if (weight == 0.0) break;
      s = detail::sample_index(game.transition(s, joint), rng.uniform());
    }
    for (std::size_t c = 0; c < C; ++c) {
      sum[c] += ret[c];
      sum_sq[c] += ret[c] * ret[c];
    }
  }
  MonteCarloEstimate out{std::vector<double>(C), std::vector<double>(C)};
  const auto n = static_cast<double>(episodes);
  for (std::size_t c = 0; c < C; ++c) {
    out.mean[c] = sum[c] / n;
    const double var = episodes > 1 ? std::max(0.0, (sum_sq[c] - n * out.mean[c] * out.mean[c]) / (n - 1.0)) : 0.0;
    out.standard_error[c] = std::sqrt(var / n);
  }
  return out;
}

/// Monte-Carlo estimate of J_i(pi). Deterministic given `seed`.
/// A horizon of zero selects default_horizon(game).
inline ValueVector evaluate_mc(const MarkovGame& game, const JointPolicy& pi, std::size_t episodes,
                               std::size_t horizon, std::uint64_t seed) {
  return evaluate_mc_channels(game, pi, game.reward_tables(), episodes, horizon,
                              CounterRng(seed, StreamPurpose::Evaluation, 0))
      .mean;
}

struct BestResponse {
  TabularPolicy policy;
  double value = 0.0;
};

/// Exact best response of `player` to the other policies in `profile`.
/// Deterministic; ties go to the lowest action index.
inline BestResponse best_response_exact(const MarkovGame& game, std::size_t player,
                                        const JointPolicy& profile) {
  if (player >= game.num_players()) throw InvalidArgument("player index out of range");
  check_exact_capacity(game);
  const FiniteMdp mdp = induced_mdp(game, game.reward_table(player), profile, player);
  const OptimalControl control = solve_optimal(mdp);
  TabularPolicy br = TabularPolicy::deterministic(player, game.action_count(player), control.actions);
  const double value = evaluate_exact(game, profile.with_policy(br))[player];
  return {std::move(br), value};
}

/// regret_i = J_i(br_i, pi_{-i}) - J_i(pi).
inline std::vector<double> regret(const MarkovGame& game, const JointPolicy& pi) {
  const ValueVector current = evaluate_exact(game, pi);
  std::vector<double> out(game.num_players());
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    out[i] = best_response_exact(game, i, pi).value - current[i];
  }
  return out;
}

inline double max_regret(const MarkovGame& game, const JointPolicy& pi) {
  const auto r = regret(game, pi);
  return *std::max_element(r.begin(), r.end());
}

inline bool is_epsilon_nash(const MarkovGame& game, const JointPolicy& pi, double epsilon) {
  return max_regret(game, pi) <= epsilon + 1e-9;
}

}  // namespace neppo

#endif  // NEPPO_EVALUATION_HPP
