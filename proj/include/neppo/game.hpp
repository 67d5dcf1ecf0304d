#ifndef NEPPO_GAME_HPP
#define NEPPO_GAME_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neppo/errors.hpp"

namespace neppo {

/// Upper bound on |S| * prod |A_i| for any game.
inline constexpr std::size_t kMaxTableEntries = 1'000'000;
/// Upper bound on |S| * prod |A_i| * |S| (dense transition kernel).
inline constexpr std::size_t kMaxKernelEntries = 50'000'000;
/// Exact evaluation and dynamic programming factor dense |S| x |S| systems.
inline constexpr std::size_t kMaxExactStates = 2000;

inline constexpr double kProbabilityTolerance = 1e-9;

/// Per-player expected discounted returns J_i.
using ValueVector = std::vector<double>;

/// A reward table indexed by (state, joint action), row-major in the state.
using RewardTable = std::vector<double>;

/// Mixed-radix encoding of joint actions. Player 0 is the most significant
/// digit, so lexicographic order on action tuples equals index order.
class JointActionSpace {
 public:
  JointActionSpace() = default;

  explicit JointActionSpace(std::vector<std::size_t> action_counts)
      : counts_(std::move(action_counts)), strides_(counts_.size(), 1) {
    if (counts_.empty()) throw InvalidArgument("a game needs at least one player");
    size_ = 1;
    for (std::size_t i = counts_.size(); i-- > 0;) {
      if (counts_[i] == 0) throw InvalidArgument("every player needs at least one action");
      strides_[i] = size_;
      if (size_ > kMaxTableEntries / counts_[i]) {
        throw CapacityError("joint action space exceeds " + std::to_string(kMaxTableEntries));
      }
      size_ *= counts_[i];
    }
  }

  std::size_t num_players() const noexcept { return counts_.size(); }
  std::size_t size() const noexcept { return size_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  std::size_t count(std::size_t player) const { return counts_.at(player); }
  std::size_t stride(std::size_t player) const { return strides_.at(player); }

  std::size_t encode(std::span<const std::size_t> actions) const {
    if (actions.size() != counts_.size()) throw InvalidArgument("joint action has wrong arity");
    std::size_t index = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (actions[i] >= counts_[i]) throw InvalidArgument("action index out of range");
      index += actions[i] * strides_[i];
    }
    return index;
  }

  std::vector<std::size_t> decode(std::size_t joint) const {
    std::vector<std::size_t> actions(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) actions[i] = (joint / strides_[i]) % counts_[i];
    return actions;
  }

  std::size_t action_of(std::size_t joint, std::size_t player) const {
    return (joint / strides_[player]) % counts_[player];
  }

  /// Index of the joint action with `player`'s component replaced.
  std::size_t with_action(std::size_t joint, std::size_t player, std::size_t action) const {
    return joint - action_of(joint, player) * strides_[player] + action * strides_[player];
  }

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Single-stage game: payoff[i][joint] for every player i.
struct NormalFormGame {
  std::vector<std::size_t> action_counts;
  std::vector<std::vector<double>> payoff;

  std::size_t num_players() const noexcept { return action_counts.size(); }

  /// Payoff vector at a pure joint action.
  std::vector<double> payoff_at(std::span<const std::size_t> actions) const {
    const JointActionSpace space(action_counts);
    const std::size_t joint = space.encode(actions);
    std::vector<double> out;
    out.reserve(payoff.size());
    for (const auto& table : payoff) out.push_back(table.at(joint));
    return out;
  }
};

/// Finite fully observable discounted Markov game with dense tables.
///
/// transition is laid out as [state][joint][next_state]; rewards as
/// [player][state * |A| + joint]. A discount of zero is admitted and denotes
/// a single-stage game.
class MarkovGame {
 public:
  MarkovGame(std::vector<std::size_t> action_counts, std::size_t num_states,
             std::vector<double> transition, std::vector<RewardTable> rewards, double discount,
             std::vector<double> initial_distribution)
      : space_(std::move(action_counts)),
        num_states_(num_states),
        transition_(std::move(transition)),
        rewards_(std::move(rewards)),
        discount_(discount),
        initial_(std::move(initial_distribution)) {
    validate();
  }

  /// Normal-form games are single-state games with zero discount.
  MarkovGame(const NormalFormGame& nf)  // NOLINT(google-explicit-constructor)
      : MarkovGame(nf.action_counts, 1,
                   std::vector<double>(JointActionSpace(nf.action_counts).size(), 1.0), nf.payoff,
                   0.0, {1.0}) {}

  std::size_t num_players() const noexcept { return space_.num_players(); }
  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_joint_actions() const noexcept { return space_.size(); }
  const JointActionSpace& joint_actions() const noexcept { return space_; }
  const std::vector<std::size_t>& action_counts() const noexcept { return space_.counts(); }
  std::size_t action_count(std::size_t player) const { return space_.count(player); }
  double discount() const noexcept { return discount_; }
  const std::vector<double>& initial_distribution() const noexcept { return initial_; }

  std::span<const double> transition(std::size_t state, std::size_t joint) const {
    return {transition_.data() + (state * space_.size() + joint) * num_states_, num_states_};
  }
  const std::vector<double>& transition_table() const noexcept { return transition_; }

  double reward(std::size_t player, std::size_t state, std::size_t joint) const {
    return rewards_[player][state * space_.size() + joint];
  }
  const RewardTable& reward_table(std::size_t player) const { return rewards_.at(player); }
  const std::vector<RewardTable>& reward_tables() const noexcept { return rewards_; }

  /// max_{s,a} |r_i(s,a)| over all players.
  double max_abs_reward() const noexcept {
    double m = 0.0;
    for (const auto& table : rewards_)
      for (double r : table) m = std::max(m, std::abs(r));
    return m;
  }

  std::size_t table_entries() const noexcept { return num_states_ * space_.size(); }

  /// Same dynamics with a replaced set of reward channels.
  MarkovGame with_rewards(std::vector<RewardTable> rewards) const {
    return MarkovGame(space_.counts(), num_states_, transition_, std::move(rewards), discount_,
                      initial_);
  }

  friend bool operator==(const MarkovGame& a, const MarkovGame& b) {
    return a.space_.counts() == b.space_.counts() && a.num_states_ == b.num_states_ &&
           a.transition_ == b.transition_ && a.rewards_ == b.rewards_ &&
           a.discount_ == b.discount_ && a.initial_ == b.initial_;
  }

 private:
  void validate() const {
    if (num_states_ == 0) throw InvalidArgument("a game needs at least one state");
    if (num_states_ > kMaxTableEntries / space_.size()) {
      throw CapacityError("state-action table exceeds " + std::to_string(kMaxTableEntries) +
                          " entries");
    }
    if (table_entries() > kMaxKernelEntries / num_states_) {
      throw CapacityError("dense transition kernel exceeds " + std::to_string(kMaxKernelEntries) +
                          " entries");
    }
    if (!(discount_ >= 0.0 && discount_ < 1.0)) {
      throw InvalidArgument("discount must lie in [0, 1)");
    }
    if (transition_.size() != table_entries() * num_states_) {
      throw InvalidArgument("transition table has wrong size");
    }
    for (std::size_t row = 0; row < table_entries(); ++row) {
      double total = 0.0;
      for (std::size_t k = 0; k < num_states_; ++k) {
        const double p = transition_[row * num_states_ + k];
        if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("negative transition entry");
        total += p;
      }
      if (std::abs(total - 1.0) > kProbabilityTolerance) {
        throw InvalidArgument("transition row " + std::to_string(row) + " sums to " +
                              std::to_string(total));
      }
    }
    if (rewards_.size() != num_players()) throw InvalidArgument("need one reward table per player");
    for (const auto& table : rewards_) {
      if (table.size() != table_entries()) throw InvalidArgument("reward table has wrong size");
      for (double r : table)
        if (!std::isfinite(r)) throw InvalidArgument("rewards must be finite");
    }
    if (initial_.size() != num_states_) throw InvalidArgument("initial distribution has wrong size");
    double total = 0.0;
    for (double p : initial_) {
      if (!(p >= 0.0)) throw InvalidArgument("negative initial probability");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
      throw InvalidArgument("initial distribution must sum to 1");
    }
  }

  JointActionSpace space_;
  std::size_t num_states_;
  std::vector<double> transition_;
  std::vector<RewardTable> rewards_;
  double discount_;
  std::vector<double> initial_;
};

/// Stationary Markov policy of one player: table[state * |A_i| + action].
class TabularPolicy {
 public:
  TabularPolicy() = default;

  TabularPolicy(std::size_t player, std::size_t num_states, std::size_t num_actions,
                std::vector<double> table)
      : player_(player), num_states_(num_states), num_actions_(num_actions), table_(std::move(table)) {
    if (num_actions_ == 0 || num_states_ == 0) throw InvalidArgument("empty policy table");
    if (table_.size() != num_states_ * num_actions_) throw InvalidArgument("policy table has wrong size");
    for (std::size_t s = 0; s < num_states_; ++s) {
      double total = 0.0;
      for (double p : row(s)) {
        if (!(p >= 0.0)) throw InvalidArgument("negative action probability");
        total += p;
      }
      if (std::abs(total - 1.0) > kProbabilityTolerance) {
        throw InvalidArgument("policy row does not sum to 1");
      }
    }
  }

  static TabularPolicy uniform(std::size_t player, std::size_t num_states, std::size_t num_actions) {
    return {player, num_states, num_actions,
            std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions))};
  }

  static TabularPolicy deterministic(std::size_t player, std::size_t num_actions,
                                     std::span<const std::size_t> action_per_state) {
    std::vector<double> table(action_per_state.size() * num_actions, 0.0);
    for (std::size_t s = 0; s < action_per_state.size(); ++s) {
      if (action_per_state[s] >= num_actions) throw InvalidArgument("action index out of range");
      table[s * num_actions + action_per_state[s]] = 1.0;
    }
    return {player, action_per_state.size(), num_actions, std::move(table)};
  }

  /// Same action in every state.
  static TabularPolicy pure(std::size_t player, std::size_t num_states, std::size_t num_actions,
                            std::size_t action) {
    const std::vector<std::size_t> actions(num_states, action);
    return deterministic(player, num_actions, actions);
  }

  std::size_t player() const noexcept { return player_; }
  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  double prob(std::size_t state, std::size_t action) const {
    return table_[state * num_actions_ + action];
  }
  std::span<const double> row(std::size_t state) const {
    return {table_.data() + state * num_actions_, num_actions_};
  }
  const std::vector<double>& table() const noexcept { return table_; }

  /// Action with probability one in every state, if the policy is pure.
  std::optional<std::vector<std::size_t>> as_deterministic() const {
    std::vector<std::size_t> out(num_states_);
    for (std::size_t s = 0; s < num_states_; ++s) {
      bool found = false;
      for (std::size_t a = 0; a < num_actions_; ++a) {
        if (prob(s, a) == 1.0) {
          out[s] = a;
          found = true;
        }
      }
      if (!found) return std::nullopt;
    }
    return out;
  }

  friend bool operator==(const TabularPolicy&, const TabularPolicy&) = default;

 private:
  std::size_t player_ = 0;
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> table_;
};

/// One policy per player, indexed by player.
class JointPolicy {
 public:
  JointPolicy() = default;

  explicit JointPolicy(std::vector<TabularPolicy> policies) : policies_(std::move(policies)) {
    for (std::size_t i = 0; i < policies_.size(); ++i) {
      if (policies_[i].player() != i) throw InvalidArgument("joint policy players must be 0..N-1");
    }
  }

  static JointPolicy uniform(const MarkovGame& game) {
    std::vector<TabularPolicy> out;
    for (std::size_t i = 0; i < game.num_players(); ++i)
      out.push_back(TabularPolicy::uniform(i, game.num_states(), game.action_count(i)));
    return JointPolicy(std::move(out));
  }

  /// Every player plays a fixed action in every state.
  static JointPolicy pure(const MarkovGame& game, std::span<const std::size_t> actions) {
    if (actions.size() != game.num_players()) throw InvalidArgument("joint action has wrong arity");
    std::vector<TabularPolicy> out;
    for (std::size_t i = 0; i < game.num_players(); ++i)
      out.push_back(TabularPolicy::pure(i, game.num_states(), game.action_count(i), actions[i]));
    return JointPolicy(std::move(out));
  }

  std::size_t num_players() const noexcept { return policies_.size(); }
  const TabularPolicy& operator[](std::size_t player) const { return policies_.at(player); }
  const std::vector<TabularPolicy>& policies() const noexcept { return policies_; }

  JointPolicy with_policy(TabularPolicy replacement) const {
    JointPolicy out = *this;
    out.policies_.at(replacement.player()) = std::move(replacement);
    return out;
  }

  /// Probability of the joint action in a state, prod_i pi_i(a_i | s).
  double joint_prob(const JointActionSpace& space, std::size_t state, std::size_t joint) const {
    double p = 1.0;
    for (std::size_t i = 0; i < policies_.size(); ++i) p *= policies_[i].prob(state, space.action_of(joint, i));
    return p;
  }

  friend bool operator==(const JointPolicy&, const JointPolicy&) = default;

 private:
  std::vector<TabularPolicy> policies_;
};

/// Throws unless the policy shapes agree with the game.
inline void check_shapes(const MarkovGame& game, const JointPolicy& pi) {
  if (pi.num_players() != game.num_players()) throw InvalidArgument("policy count != player count");
  for (std::size_t i = 0; i < pi.num_players(); ++i) {
    if (pi[i].num_states() != game.num_states() || pi[i].num_actions() != game.action_count(i)) {
      throw InvalidArgument("policy of player " + std::to_string(i) + " does not match the game");
    }
  }
}

inline void check_exact_capacity(const MarkovGame& game) {
  if (game.num_states() > kMaxExactStates) {
    throw CapacityError("exact solvers support at most " + std::to_string(kMaxExactStates) +
                        " states");
  }
}

}  // namespace neppo

#endif  // NEPPO_GAME_HPP
