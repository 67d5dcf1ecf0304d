#ifndef NEPPO_BASELINES_HPP
#define NEPPO_BASELINES_HPP

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "neppo/evaluation.hpp"
#include "neppo/game.hpp"
#include "neppo/mdp.hpp"
#include "neppo/rng.hpp"
#include "neppo/solvers.hpp"
#include "neppo/trace_io.hpp"

namespace neppo {

/// Average reward (1/N) sum_i r_i as a shared table.
inline RewardTable average_reward_table(const MarkovGame& game) {
  RewardTable avg(game.table_entries(), 0.0);
  const double scale = 1.0 / static_cast<double>(game.num_players());
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    const auto& r = game.reward_table(i);
    for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += scale * r[k];
  }
  return avg;
}

/// MAPPO-like centralized learner: maximizes the average return.
inline JointPolicy mappo_like(const MarkovGame& game, const SolverBudget& budget,
                              const std::optional<JointPolicy>& init = std::nullopt) {
  return coop_solve(game, average_reward_table(game), init.value_or(JointPolicy::uniform(game)), budget);
}

/// IPPO-like independent learners: every round each player takes a
/// clipped-surrogate step on its own return against the current others,
/// all players simultaneously. Always learns by policy gradient, so
/// budget.mode is ignored.
inline JointPolicy ippo_like(const MarkovGame& game, const SolverBudget& budget, std::uint64_t seed,
                             const std::optional<JointPolicy>& init = std::nullopt) {
  SolverBudget b = budget;
  b.mode = SolverMode::Iterative;
  b.validate();
  check_exact_capacity(game);
  JointPolicy current = init.value_or(JointPolicy::uniform(game));
  check_shapes(game, current);
  const std::size_t n = game.num_players();
  std::vector<std::vector<double>> logits;
  for (const auto& p : current.policies()) logits.push_back(detail::logits_from_policy(p));
  const CounterRng rng(seed, StreamPurpose::Baseline, 0);

  for (std::size_t round = 0; round < b.iterations; ++round) {
    std::vector<TabularPolicy> next;
    next.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const FiniteMdp mdp = induced_mdp(game, game.reward_table(i), current, i);
      const auto stats = detail::gradient_statistics(mdp, current[i], b, rng.split(round * n + i));
      detail::clipped_surrogate_ascent(logits[i], current[i], stats, b.learning_rate, b.clip, b.epochs);
      next.push_back(detail::policy_from_logits(i, game.num_states(), game.action_count(i), logits[i]));
    }
    current = JointPolicy(std::move(next));
  }
  return current;
}

struct RegretRow {
  std::string name;
  std::vector<double> regrets;  // per player
  double max_regret = 0.0;
  bool lowest = false;
};

/// Max regret of each named joint policy against exact best responses,
/// sorted ascending (stable for equal values). Every row attaining the
/// minimum is flagged.
inline std::vector<RegretRow> regret_table(const MarkovGame& game,
                                           const std::vector<std::pair<std::string, JointPolicy>>& policies) {
  std::vector<RegretRow> rows;
  for (const auto& [name, pi] : policies) {
    RegretRow row{name, regret(game, pi), 0.0, false};
    row.max_regret = *std::max_element(row.regrets.begin(), row.regrets.end());
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const RegretRow& a, const RegretRow& b) { return a.max_regret < b.max_regret; });
  if (!rows.empty()) {
    const double best = rows.front().max_regret;
    for (auto& r : rows) r.lowest = r.max_regret == best;
  }
  return rows;
}

/// True when exactly one row is flagged, i.e. the first row is strictly lowest.
inline bool strictly_lowest(const std::vector<RegretRow>& rows, const std::string& name) {
  return !rows.empty() && rows.front().name == name && (rows.size() == 1 || rows[1].max_regret > rows[0].max_regret);
}

inline std::string regret_table_csv(const std::vector<RegretRow>& rows) {
  std::string out = "algorithm,max_regret";
  const std::size_t n = rows.empty() ? 0 : rows.front().regrets.size();
  for (std::size_t i = 1; i <= n; ++i) out += ",regret_" + std::to_string(i);
  out += ",lowest\n";
  for (const auto& r : rows) {
    out += r.name + "," + format_double(r.max_regret);
    for (double x : r.regrets) out += "," + format_double(x);
    out += r.lowest ? ",1\n" : ",0\n";
  }
  return out;
}

inline std::string regret_table_text(const std::vector<RegretRow>& rows) {
  std::size_t width = std::string("Algorithm").size();
  for (const auto& r : rows) width = std::max(width, r.name.size());
  auto pad = [&](std::string s) {
    s.resize(width, ' ');
    return s;
  };
  std::string out = pad("Algorithm") + "  Max regret\n";
  out += std::string(width, '-') + "  ----------\n";
  for (const auto& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%10.6f", r.max_regret);
    out += pad(r.name) + "  " + buf + (r.lowest ? "  *" : "") + "\n";
  }
  return out;
}

}  // namespace neppo

#endif  // NEPPO_BASELINES_HPP
