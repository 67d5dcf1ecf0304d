#ifndef NEPPO_POTENTIAL_HPP
#define NEPPO_POTENTIAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "neppo/errors.hpp"
#include "neppo/evaluation.hpp"
#include "neppo/game.hpp"

namespace neppo {

enum class PotentialKind { ConvexCombination, StateFeatureSoftmax };

/// How ConvexCombination maps its N-1 parameters to simplex weights.
///  - Direct:  lambda = (w_1, ..., w_{N-1}, 1 - sum w); W = {w >= 0, sum w <= 1}.
///             For two players this is lambda = (w, 1 - w) with w in [0, 1].
///  - Softmax: lambda = softmax(w_1, ..., w_{N-1}, 0); W is all of R^{N-1}.
enum class SimplexMapping { Direct, Softmax };

/// Per-state feature vectors f(s), one row per state.
struct StateFeatures {
  std::size_t dim = 0;
  std::vector<double> values;  // [s * dim + k]

  static StateFeatures one_hot(std::size_t num_states) {
    StateFeatures f{num_states, std::vector<double>(num_states * num_states, 0.0)};
    for (std::size_t s = 0; s < num_states; ++s) f.values[s * num_states + s] = 1.0;
    return f;
  }

  std::size_t num_states() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t s) const { return {values.data() + s * dim, dim}; }

  friend bool operator==(const StateFeatures&, const StateFeatures&) = default;
};

/// Parameter vector w of a potential family phi_w.
///
/// StateFeatureSoftmax stores W (N x d, row-major) followed by b (N), and
/// weights player i's reward in state s by softmax_i(W f(s) + b).
struct PotentialParams {
  PotentialKind kind = PotentialKind::ConvexCombination;
  std::vector<double> w;
  SimplexMapping mapping = SimplexMapping::Direct;
  std::size_t feature_dim = 0;
  std::optional<StateFeatures> features;  // one-hot over states when absent

  static PotentialParams convex(std::vector<double> w, SimplexMapping mapping = SimplexMapping::Direct) {
    return {PotentialKind::ConvexCombination, std::move(w), mapping, 0, std::nullopt};
  }

  /// Two-player weight lambda = (w, 1 - w).
  static PotentialParams scalar(double w) { return convex({w}); }

  static PotentialParams state_softmax(std::size_t num_players, std::size_t feature_dim,
                                       std::vector<double> w = {}) {
    if (w.empty()) w.assign(num_players * (feature_dim + 1), 0.0);
    return {PotentialKind::StateFeatureSoftmax, std::move(w), SimplexMapping::Softmax, feature_dim, std::nullopt};
  }

  std::size_t dim() const noexcept { return w.size(); }

  friend bool operator==(const PotentialParams&, const PotentialParams&) = default;
};

/// Throws unless `params` fits a game with the given shape.
inline void check_params(const PotentialParams& params, std::size_t num_players, std::size_t num_states) {
  for (double x : params.w)
    if (!std::isfinite(x)) throw InvalidArgument("potential parameters must be finite");
  if (params.kind == PotentialKind::ConvexCombination) {
    if (params.w.size() + 1 != num_players) {
      throw InvalidArgument("convex combination needs N-1 = " + std::to_string(num_players - 1) + " parameters");
    }
    return;
  }
  if (params.w.size() != num_players * (params.feature_dim + 1)) {
    throw InvalidArgument("state-feature softmax needs N*(d+1) parameters");
  }
  if (params.features) {
    if (params.features->dim != params.feature_dim || params.features->num_states() != num_states) {
      throw InvalidArgument("state features do not match the parameterization");
    }
  } else if (params.feature_dim != num_states) {
    throw InvalidArgument("one-hot features need feature_dim == number of states");
  }
}

namespace detail {

inline std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) total += (out[k] = std::exp(logits[k] - m));
  for (double& x : out) x /= total;
  return out;
}

}  // namespace detail

/// Player weights lambda(s) used by phi_w in state s.
inline std::vector<double> player_weights(const PotentialParams& params, std::size_t num_players, std::size_t state) {
  if (params.kind == PotentialKind::ConvexCombination) {
    if (params.mapping == SimplexMapping::Softmax) {
      std::vector<double> padded(params.w);
      padded.push_back(0.0);
      return detail::softmax(padded);
    }
    std::vector<double> lambda(params.w);
    double rest = 1.0;
    for (double x : params.w) rest -= x;
    lambda.push_back(rest);
    return lambda;
  }
  const std::size_t d = params.feature_dim;
  std::vector<double> logits(num_players);
  for (std::size_t i = 0; i < num_players; ++i) {
    double z = params.w[num_players * d + i];
    if (params.features) {
      const auto f = params.features->row(state);
      for (std::size_t k = 0; k < d; ++k) z += params.w[i * d + k] * f[k];
    } else {
      z += params.w[i * d + state];
    }
    logits[i] = z;
  }
  return detail::softmax(logits);
}

/// phi_w(s, a) for every (s, joint a), laid out like a game reward table.
inline RewardTable potential_reward_table(const PotentialParams& params, const MarkovGame& game) {
  check_params(params, game.num_players(), game.num_states());
  const std::size_t A = game.num_joint_actions();
  RewardTable table(game.table_entries(), 0.0);
  for (std::size_t s = 0; s < game.num_states(); ++s) {
    const auto lambda = player_weights(params, game.num_players(), s);
    for (std::size_t a = 0; a < A; ++a) {
      double phi = 0.0;
      for (std::size_t i = 0; i < lambda.size(); ++i) phi += lambda[i] * game.reward(i, s, a);
      table[s * A + a] = phi;
    }
  }
  return table;
}

/// phi_w(s, a) = sum_i lambda_i(s) r_i(s, a).
inline double stage_reward(const PotentialParams& params, const MarkovGame& game, std::size_t state,
                           std::span<const std::size_t> actions) {
  check_params(params, game.num_players(), game.num_states());
  if (state >= game.num_states()) throw InvalidArgument("state index out of range");
  const std::size_t joint = game.joint_actions().encode(actions);
  const auto lambda = player_weights(params, game.num_players(), state);
  double phi = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) phi += lambda[i] * game.reward(i, state, joint);
  return phi;
}

/// Phi_w(pi) = E[sum_t gamma^t phi_w(s_t, a_t)].
inline double potential_value(const PotentialParams& params, const MarkovGame& game, const JointPolicy& pi) {
  const RewardTable table = potential_reward_table(params, game);
  return evaluate_channels(game, pi, std::span<const RewardTable>(&table, 1)).front();
}

/// (w + delta u, w - delta u).
inline std::pair<PotentialParams, PotentialParams> perturb(const PotentialParams& params,
                                                           std::span<const double> u, double delta) {
  if (u.size() != params.w.size()) throw InvalidArgument("direction has wrong dimension");
  PotentialParams hat = params;
  PotentialParams check = params;
  for (std::size_t k = 0; k < u.size(); ++k) {
    hat.w[k] = params.w[k] + delta * u[k];
    check.w[k] = params.w[k] - delta * u[k];
  }
  return {std::move(hat), std::move(check)};
}

/// Euclidean projection onto {x >= 0, sum x <= 1}.
inline std::vector<double> project_capped_simplex(std::vector<double> x) {
  double total = 0.0;
  for (double& v : x) total += (v = std::max(v, 0.0));
  if (total <= 1.0) return x;
  if (x.size() == 1) return {1.0};
  // Onto {x >= 0, sum x = 1}: sort-and-threshold.
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  for (double& v : x) v = std::max(v - theta, 0.0);
  return x;
}

/// Projection onto the feasible set W; identity for unconstrained families.
inline PotentialParams project(const PotentialParams& params) {
  if (params.kind != PotentialKind::ConvexCombination || params.mapping != SimplexMapping::Direct) return params;
  PotentialParams out = params;
  out.w = project_capped_simplex(params.w);
  return out;
}

// JSON: {"kind": "convex_combination" | "state_feature_softmax", "w": [...],
//        "mapping": "direct" | "softmax", "feature_dim": d, "features": [[...], ...]}

inline nlohmann::json params_to_json(const PotentialParams& params) {
  nlohmann::json j;
  if (params.kind == PotentialKind::ConvexCombination) {
    j["kind"] = "convex_combination";
    j["mapping"] = params.mapping == SimplexMapping::Direct ? "direct" : "softmax";
  } else {
    j["kind"] = "state_feature_softmax";
    j["feature_dim"] = params.feature_dim;
    if (params.features) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t s = 0; s < params.features->num_states(); ++s) {
        const auto r = params.features->row(s);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
      }
      j["features"] = std::move(rows);
    }
  }
  j["w"] = params.w;
  return j;
}

inline PotentialParams params_from_json(const nlohmann::json& j) {
  try {
    PotentialParams p;
    const auto kind = j.at("kind").get<std::string>();
    p.w = j.at("w").get<std::vector<double>>();
    if (kind == "convex_combination") {
      p.kind = PotentialKind::ConvexCombination;
      const auto mapping = j.value("mapping", std::string("direct"));
      if (mapping == "direct") {
        p.mapping = SimplexMapping::Direct;
      } else if (mapping == "softmax") {
        p.mapping = SimplexMapping::Softmax;
      } else {
        throw ParseError("unknown simplex mapping '" + mapping + "'");
      }
    } else if (kind == "state_feature_softmax") {
      p.kind = PotentialKind::StateFeatureSoftmax;
      p.mapping = SimplexMapping::Softmax;
      p.feature_dim = j.at("feature_dim").get<std::size_t>();
      if (j.contains("features")) {
        const auto rows = j.at("features").get<std::vector<std::vector<double>>>();
        StateFeatures f{p.feature_dim, {}};
        for (const auto& r : rows) {
          if (r.size() != p.feature_dim) throw ParseError("feature rows must have feature_dim entries");
          f.values.insert(f.values.end(), r.begin(), r.end());
        }
        p.features = std::move(f);
      }
    } else {
      throw ParseError("unknown potential kind '" + kind + "'");
    }
    return p;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid potential parameters: ") + e.what());
  }
}

}  // namespace neppo

#endif  // NEPPO_POTENTIAL_HPP
