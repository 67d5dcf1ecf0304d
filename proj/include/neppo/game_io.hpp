#ifndef NEPPO_GAME_IO_HPP
#define NEPPO_GAME_IO_HPP

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "neppo/errors.hpp"
#include "neppo/game.hpp"

namespace neppo {

using json = nlohmann::json;

// Game files
//
//   {
//     "players": 2, "states": 1, "actions": [2, 2], "gamma": 0.0, "rho": [1.0],
//     "transition": [[s, [a_1, ..., a_N], s_next, prob], ...],
//     "rewards":    [[s, [a_1, ..., a_N], [r_1, ..., r_N]], ...]
//   }
//
// Joint actions may also be given as a single joint index. Missing reward
// entries are zero. A normal-form game may instead be written as
//
//   { "payoff_matrix": [[[1, 1], [1, 0.5]], [[0.5, 1.75], [0, 2]]] }
//
// nested one level per player, each leaf holding the N payoffs.

namespace detail {

inline std::size_t read_joint(const json& j, const JointActionSpace& space) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto index = j.get<long long>();
    if (index < 0 || static_cast<std::size_t>(index) >= space.size()) throw InvalidArgument("joint index out of range");
    return static_cast<std::size_t>(index);
  }
  return space.encode(j.get<std::vector<std::size_t>>());
}

inline bool is_payoff_leaf(const json& node) {
  if (!node.is_array() || node.empty()) return false;
  for (const auto& x : node)
    if (!x.is_number()) return false;
  return true;
}

inline void collect_payoffs(const json& node, std::size_t depth, std::vector<std::size_t>& counts,
                            std::vector<std::vector<double>>& leaves, std::size_t& leaf_depth) {
  if (is_payoff_leaf(node) && depth > 0) {
    if (leaf_depth == 0) leaf_depth = depth;
    if (depth != leaf_depth) throw ParseError("payoff_matrix nesting is inconsistent");
    leaves.push_back(node.get<std::vector<double>>());
    return;
  }
  if (!node.is_array() || node.empty()) throw ParseError("payoff_matrix must be a nested non-empty array");
  if (depth == counts.size()) counts.push_back(node.size());
  if (counts[depth] != node.size()) throw ParseError("payoff_matrix is ragged");
  for (const auto& child : node) collect_payoffs(child, depth + 1, counts, leaves, leaf_depth);
}

inline NormalFormGame parse_payoff_matrix(const json& matrix) {
  std::vector<std::size_t> counts;
  std::vector<std::vector<double>> leaves;
  std::size_t leaf_depth = 0;
  collect_payoffs(matrix, 0, counts, leaves, leaf_depth);
  if (leaf_depth != counts.size()) throw ParseError("payoff_matrix nesting is inconsistent");
  const std::size_t n = counts.size();
  const JointActionSpace space(counts);
  if (leaves.size() != space.size()) throw ParseError("payoff_matrix is ragged");
  NormalFormGame game{counts, std::vector<std::vector<double>>(n, std::vector<double>(space.size()))};
  for (std::size_t joint = 0; joint < leaves.size(); ++joint) {
    if (leaves[joint].size() != n) throw ParseError("each payoff leaf needs one entry per player");
    for (std::size_t i = 0; i < n; ++i) game.payoff[i][joint] = leaves[joint][i];
  }
  return game;
}

inline MarkovGame parse_full_game(const json& j) {
  const auto players = j.at("players").get<std::size_t>();
  const auto states = j.at("states").get<std::size_t>();
  auto actions = j.at("actions").get<std::vector<std::size_t>>();
  if (actions.size() != players) throw ParseError("'actions' needs one entry per player");
  const JointActionSpace space(actions);
  if (states == 0) throw InvalidArgument("a game needs at least one state");
  if (states > kMaxTableEntries / space.size()) throw CapacityError("state-action table too large");
  if (states * space.size() > kMaxKernelEntries / states) throw CapacityError("transition kernel too large");
  const std::size_t entries = states * space.size();

  std::vector<double> transition(entries * states, 0.0);
  for (const auto& t : j.at("transition")) {
    if (!t.is_array() || t.size() != 4) throw ParseError("transition entries are [s, a, s', p]");
    const auto s = t[0].get<std::size_t>();
    const auto next = t[2].get<std::size_t>();
    if (s >= states || next >= states) throw InvalidArgument("state index out of range");
    const std::size_t joint = read_joint(t[1], space);
    transition[(s * space.size() + joint) * states + next] += t[3].get<double>();
  }

  std::vector<RewardTable> rewards(players, RewardTable(entries, 0.0));
  for (const auto& r : j.at("rewards")) {
    if (!r.is_array() || r.size() != 3) throw ParseError("reward entries are [s, a, [r_1..r_N]]");
    const auto s = r[0].get<std::size_t>();
    if (s >= states) throw InvalidArgument("state index out of range");
    const std::size_t joint = read_joint(r[1], space);
    const auto values = r[2].get<std::vector<double>>();
    if (values.size() != players) throw ParseError("reward entry needs one value per player");
    for (std::size_t i = 0; i < players; ++i) rewards[i][s * space.size() + joint] = values[i];
  }
  return MarkovGame(std::move(actions), states, std::move(transition), std::move(rewards),
                    j.at("gamma").get<double>(), j.at("rho").get<std::vector<double>>());
}

}  // namespace detail

/// Parses a game description. Shape and syntax problems become ParseError;
/// CapacityError passes through unchanged.
inline MarkovGame game_from_json(const json& j) {
  try {
    if (j.contains("payoff_matrix")) return MarkovGame(detail::parse_payoff_matrix(j.at("payoff_matrix")));
    return detail::parse_full_game(j);
  } catch (const CapacityError&) {
    throw;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid game description: ") + e.what());
  }
}

inline json game_to_json(const MarkovGame& game) {
  const auto& space = game.joint_actions();
  json transition = json::array();
  json rewards = json::array();
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    for (std::size_t joint = 0; joint < space.size(); ++joint) {
      const json actions = space.decode(joint);
      const auto next = game.transition(s, joint);
      for (std::size_t k = 0; k < next.size(); ++k) {
        if (next[k] != 0.0) transition.push_back({s, actions, k, next[k]});
      }
      std::vector<double> r(game.num_players());
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = game.reward(i, s, joint);
      rewards.push_back({s, actions, r});
    }
  }
  return {{"players", game.num_players()},
          {"states", game.num_states()},
          {"actions", game.action_counts()},
          {"gamma", game.discount()},
          {"rho", game.initial_distribution()},
          {"transition", std::move(transition)},
          {"rewards", std::move(rewards)}};
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline MarkovGame load_game(const std::filesystem::path& path) { return game_from_json(read_json_file(path)); }

inline void save_game(const MarkovGame& game, const std::filesystem::path& path) {
  write_text_file(path, game_to_json(game).dump(2) + "\n");
}

// Policies: {"players": N, "states": S, "policies": [{"player": i, "table": [[...], ...]}, ...]}

inline json policy_to_json(const JointPolicy& pi) {
  json policies = json::array();
  std::size_t states = 0;
  for (const auto& p : pi.policies()) {
    states = p.num_states();
    json rows = json::array();
    for (std::size_t s = 0; s < p.num_states(); ++s) {
      const auto row = p.row(s);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    policies.push_back({{"player", p.player()}, {"table", std::move(rows)}});
  }
  return {{"players", pi.num_players()}, {"states", states}, {"policies", std::move(policies)}};
}

inline JointPolicy policy_from_json(const json& j) {
  try {
    std::vector<TabularPolicy> out;
    for (const auto& p : j.at("policies")) {
      const auto rows = p.at("table").get<std::vector<std::vector<double>>>();
      if (rows.empty()) throw ParseError("policy table is empty");
      std::vector<double> flat;
      for (const auto& row : rows) {
        if (row.size() != rows.front().size()) throw ParseError("policy table is ragged");
        flat.insert(flat.end(), row.begin(), row.end());
      }
      out.emplace_back(p.at("player").get<std::size_t>(), rows.size(), rows.front().size(), std::move(flat));
    }
    return JointPolicy(std::move(out));
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid policy description: ") + e.what());
  }
}

}  // namespace neppo

#endif  // NEPPO_GAME_IO_HPP
