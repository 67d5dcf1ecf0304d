#ifndef NEPPO_ORACLES_HPP
#define NEPPO_ORACLES_HPP

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neppo/algorithm.hpp"
#include "neppo/evaluation.hpp"
#include "neppo/game.hpp"
#include "neppo/potential.hpp"
#include "neppo/trace_io.hpp"

namespace neppo {

// ---------------------------------------------------------------------------
// The 2x2 toy game and its closed-form curves
// ---------------------------------------------------------------------------

///          B1            B2
///   A1  (1, 1)        (1, 1/2)
///   A2  (1/2, 7/4)    (0, 2)
inline NormalFormGame toy_game() {
  return {{2, 2}, {{1.0, 1.0, 0.5, 0.0}, {1.0, 0.5, 1.75, 2.0}}};
}

inline constexpr double kTieTolerance = 1e-12;

/// Piecewise closed form on [lower, upper] with set-valued breakpoints.
struct PiecewiseCurve {
  double lower = 0.0;
  double upper = 1.0;
  std::vector<double> breakpoints;                       // increasing, interior
  std::vector<std::function<double(double)>> branches;   // breakpoints.size() + 1
  std::vector<std::pair<double, double>> tie_sets;       // admissible values at each breakpoint
  std::string name;

  bool is_tie(double w) const {
    for (double b : breakpoints)
      if (std::abs(w - b) <= kTieTolerance) return true;
    return false;
  }

  double operator()(double w) const {
    if (!(w >= lower - kTieTolerance && w <= upper + kTieTolerance)) {
      throw InvalidArgument(name + ": w outside [" + format_double(lower) + ", " + format_double(upper) + "]");
    }
    std::size_t k = 0;
    for (; k < breakpoints.size(); ++k) {
      if (std::abs(w - breakpoints[k]) <= kTieTolerance) {
        throw SetValuedError(name + " is set-valued at w = " + format_double(breakpoints[k]), tie_sets[k].first,
                             tie_sets[k].second);
      }
      if (w < breakpoints[k]) break;
    }
    return branches[k](w);
  }
};

/// max{F_1, F_2}(w) for the toy game with Phi_w = w J_1 + (1 - w) J_2.
inline const PiecewiseCurve& toy_maxF_curve() {
  static const PiecewiseCurve curve{
      0.0,
      1.0,
      {1.0 / 3.0, 0.6},
      {[](double w) { return 5.0 * (1.0 - w) / 2.0; }, [](double w) { return 5.0 * (1.0 - w) / 4.0; },
       [](double) { return 0.0; }},
      {{5.0 / 6.0, 5.0 / 3.0}, {0.0, 0.5}},
      "toy max F"};
  return curve;
}

inline double toy_maxF(double w) { return toy_maxF_curve()(w); }

/// F_1(w) on the open intervals.
inline double toy_F1(double w) {
  static const PiecewiseCurve curve{
      0.0,
      1.0,
      {1.0 / 3.0, 0.6},
      {[](double w) { return (5.0 - 5.0 * w) / 2.0; }, [](double w) { return (5.0 - 5.0 * w) / 4.0; },
       [](double) { return 0.0; }},
      {{5.0 / 6.0, 5.0 / 3.0}, {0.0, 0.5}},
      "toy F_1"};
  return curve(w);
}

/// F_2(w) on the open intervals; set-valued at w = 1 where the cooperative
/// maximizer is not unique.
inline double toy_F2(double w) {
  static const PiecewiseCurve curve{
      0.0,
      1.0,
      {1.0 / 3.0, 0.6, 1.0},
      {[](double) { return 0.0; }, [](double w) { return 3.0 * w / 4.0; }, [](double) { return 0.0; },
       [](double) { return 0.0; }},
      {{-0.25, 0.0}, {0.0, 0.7}, {-0.5, 0.0}},
      "toy F_2"};
  return curve(w);
}

/// max_pi Phi_w(pi); continuous, so defined at the tie points as well.
inline double toy_phi_max(double w) {
  if (!(w >= -kTieTolerance && w <= 1.0 + kTieTolerance)) throw InvalidArgument("w outside [0, 1]");
  if (w <= 1.0 / 3.0) return 2.0 * (1.0 - w);
  if (w <= 0.6) return (7.0 - 5.0 * w) / 4.0;
  return 1.0;
}

/// Pure maximizer of Phi_w as (player-1 action, player-2 action), 0-based.
inline std::array<std::size_t, 2> toy_phi_argmax(double w) {
  if (!(w >= -kTieTolerance && w <= 1.0 + kTieTolerance)) throw InvalidArgument("w outside [0, 1]");
  for (double tie : {1.0 / 3.0, 0.6, 1.0}) {
    if (std::abs(w - tie) <= kTieTolerance) {
      const double v = toy_phi_max(tie);
      throw SetValuedError("argmax of Phi_w is a set at w = " + format_double(tie), v, v);
    }
  }
  if (w < 1.0 / 3.0) return {1, 1};
  if (w < 0.6) return {1, 0};
  return {0, 0};
}

// ---------------------------------------------------------------------------
// Exact potential check
// ---------------------------------------------------------------------------

/// Four profiles a -> b -> c -> d -> a where `first` moves on a->b and c->d
/// and `second` on b->c and d->a. For an exact potential game the movers'
/// payoff changes around the cycle sum to zero.
struct DeviationCycle {
  std::size_t first = 0;
  std::size_t second = 1;
  std::array<std::size_t, 4> profiles{};  // joint indices a, b, c, d
  double first_difference = 0.0;   // [u1(a) - u1(b)] - [u1(d) - u1(c)]
  double second_difference = 0.0;  // [u2(a) - u2(d)] - [u2(b) - u2(c)]
  double cycle_sum = 0.0;          // second_difference - first_difference
};

struct PotentialCheck {
  bool is_potential = false;
  std::vector<double> potential;  // least-squares potential per joint action
  double residual = 0.0;          // max |Phi(a) - Phi(a') - (u_i(a) - u_i(a'))|
  std::optional<DeviationCycle> witness;
};

inline constexpr std::size_t kMaxEnumeratedProfiles = 10'000;

/// Decides whether a normal-form game is an exact potential game.
///
/// Fits Phi to every unilateral-deviation equation
///   Phi(a) - Phi(a') = u_i(a) - u_i(a')
/// in the least-squares sense; the game is a potential game iff the fit is
/// exact (residual <= tolerance). Otherwise the 2x2 deviation cycle with the
/// largest violation is returned. The potential is normalized so that
/// Phi(joint 0) = u_1(joint 0).
inline PotentialCheck exact_potential_check(const NormalFormGame& game, double tolerance = 1e-9) {
  const JointActionSpace space(game.action_counts);
  const std::size_t M = space.size();
  if (M > kMaxEnumeratedProfiles) throw CapacityError("potential check supports at most 1e4 profiles");
  if (game.payoff.size() != space.num_players()) throw InvalidArgument("need one payoff table per player");
  for (const auto& t : game.payoff)
    if (t.size() != M) throw InvalidArgument("payoff table has wrong size");

  struct Equation {
    std::size_t a, b;
    double diff;
  };
  std::vector<Equation> equations;
  for (std::size_t i = 0; i < space.num_players(); ++i) {
    for (std::size_t a = 0; a < M; ++a) {
      for (std::size_t alt = space.action_of(a, i) + 1; alt < space.count(i); ++alt) {
        const std::size_t b = space.with_action(a, i, alt);
        equations.push_back({a, b, game.payoff[i][a] - game.payoff[i][b]});
      }
    }
  }

  // Normal equations (graph Laplacian) with Phi(0) pinned to zero.
  PotentialCheck out;
  out.potential.assign(M, 0.0);
  if (M > 1) {
    const auto n = static_cast<Eigen::Index>(M - 1);
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    auto add = [&](std::size_t r, std::size_t c, double v) {
      if (r > 0 && c > 0) triplets.emplace_back(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1), v);
    };
    for (const auto& e : equations) {
      add(e.a, e.a, 1.0);
      add(e.b, e.b, 1.0);
      add(e.a, e.b, -1.0);
      add(e.b, e.a, -1.0);
      if (e.a > 0) rhs(static_cast<Eigen::Index>(e.a - 1)) += e.diff;
      if (e.b > 0) rhs(static_cast<Eigen::Index>(e.b - 1)) -= e.diff;
    }
    Eigen::SparseMatrix<double> laplacian(n, n);
    laplacian.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-15);
    cg.setMaxIterations(10 * static_cast<Eigen::Index>(M) + 100);
    cg.compute(laplacian);
    const Eigen::VectorXd phi = cg.solve(rhs);
    for (std::size_t a = 1; a < M; ++a) out.potential[a] = phi(static_cast<Eigen::Index>(a - 1));
  }
  const double shift = game.payoff[0][0] - out.potential[0];
  for (double& v : out.potential) v += shift;

  for (const auto& e : equations) {
    out.residual = std::max(out.residual, std::abs(out.potential[e.a] - out.potential[e.b] - e.diff));
  }
  out.is_potential = out.residual <= tolerance;
  if (out.is_potential) return out;

  DeviationCycle best;
  double best_violation = -1.0;
  for (std::size_t i = 0; i < space.num_players(); ++i) {
    for (std::size_t j = i + 1; j < space.num_players(); ++j) {
      for (std::size_t a = 0; a < M; ++a) {
        for (std::size_t ai = space.action_of(a, i) + 1; ai < space.count(i); ++ai) {
          for (std::size_t aj = space.action_of(a, j) + 1; aj < space.count(j); ++aj) {
            const std::size_t b = space.with_action(a, i, ai);
            const std::size_t c = space.with_action(b, j, aj);
            const std::size_t d = space.with_action(a, j, aj);
            const auto& ui = game.payoff[i];
            const auto& uj = game.payoff[j];
            const double first = (ui[a] - ui[b]) - (ui[d] - ui[c]);
            const double second = (uj[a] - uj[d]) - (uj[b] - uj[c]);
            const double violation = std::abs(second - first);
            if (violation > best_violation) {
              best_violation = violation;
              best = {i, j, {a, b, c, d}, first, second, second - first};
            }
          }
        }
      }
    }
  }
  out.witness = best;
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// All pure joint actions from which no player gains by a unilateral
/// deviation (within `tolerance`).
inline std::vector<std::vector<std::size_t>> brute_force_pure_nash(const NormalFormGame& game,
                                                                   double tolerance = 1e-12) {
  const JointActionSpace space(game.action_counts);
  if (space.size() > kMaxEnumeratedProfiles) throw CapacityError("too many profiles to enumerate");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t a = 0; a < space.size(); ++a) {
    bool stable = true;
    for (std::size_t i = 0; i < space.num_players() && stable; ++i) {
      for (std::size_t alt = 0; alt < space.count(i); ++alt) {
        if (game.payoff[i][space.with_action(a, i, alt)] > game.payoff[i][a] + tolerance) {
          stable = false;
          break;
        }
      }
    }
    if (stable) out.push_back(space.decode(a));
  }
  return out;
}

namespace detail {

/// Points of the simplex in R^k whose coordinates are multiples of 1/d for
/// some d in 1..max_denominator, each listed once.
inline std::vector<std::vector<double>> simplex_grid(std::size_t k, std::size_t max_denominator) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> parts(k);
  for (std::size_t d = 1; d <= max_denominator; ++d) {
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t idx, std::size_t remaining) {
      if (idx + 1 == k) {
        parts[idx] = remaining;
        std::size_t g = d;
        for (std::size_t x : parts) g = std::gcd(g, x);
        if (g != 1) return;  // already listed with a smaller denominator
        std::vector<double> point(k);
        for (std::size_t m = 0; m < k; ++m) point[m] = static_cast<double>(parts[m]) / static_cast<double>(d);
        out.push_back(std::move(point));
        return;
      }
      for (std::size_t x = 0; x <= remaining; ++x) {
        parts[idx] = x;
        rec(idx + 1, remaining - x);
      }
    };
    rec(0, d);
  }
  return out;
}

/// Every stationary policy of `player` whose rows lie on the grid.
inline std::vector<TabularPolicy> grid_policies(const MarkovGame& game, std::size_t player,
                                                std::size_t max_denominator, std::size_t limit) {
  const std::size_t A = game.action_count(player);
  const std::size_t S = game.num_states();
  const auto rows = simplex_grid(A, max_denominator);
  double count = 1.0;
  for (std::size_t s = 0; s < S; ++s) count *= static_cast<double>(rows.size());
  if (count > static_cast<double>(limit)) throw CapacityError("policy grid too large to enumerate");
  std::vector<TabularPolicy> out;
  std::vector<std::size_t> choice(S, 0);
  for (;;) {
    std::vector<double> table;
    for (std::size_t s = 0; s < S; ++s) table.insert(table.end(), rows[choice[s]].begin(), rows[choice[s]].end());
    out.emplace_back(player, S, A, std::move(table));
    std::size_t s = 0;
    while (s < S && ++choice[s] == rows.size()) choice[s++] = 0;
    if (s == S) break;
  }
  return out;
}

}  // namespace detail

inline constexpr std::size_t kMaxAlphaEvaluations = 200'000;

/// Grid lower bound on the near-potential parameter
///   alpha = max_i max_{pi_i, pi_i', pi_{-i}} |dJ_i - dPhi_w|
/// over stationary policies whose action probabilities are multiples of
/// 1/d, d < grid_resolution. Grids are nested across resolutions, so the
/// estimate is nondecreasing in grid_resolution.
inline double global_alpha_estimate(const MarkovGame& game, const PotentialParams& params,
                                    std::size_t grid_resolution) {
  if (grid_resolution < 2) throw InvalidArgument("grid_resolution must be at least 2");
  check_exact_capacity(game);
  const std::size_t n = game.num_players();
  const std::size_t max_den = grid_resolution - 1;

  std::vector<std::vector<TabularPolicy>> grids;
  double evaluations = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    grids.push_back(detail::grid_policies(game, i, max_den, kMaxAlphaEvaluations));
    evaluations *= static_cast<double>(grids.back().size());
  }
  if (evaluations > static_cast<double>(kMaxAlphaEvaluations)) {
    throw CapacityError("alpha grid needs more than " + std::to_string(kMaxAlphaEvaluations) + " evaluations");
  }

  const RewardTable phi = potential_reward_table(params, game);
  double alpha = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // For fixed pi_{-i} the inner max over (pi_i, pi_i') of |D(pi_i') - D(pi_i)|
    // with D = J_i - Phi_w is max D - min D.
    RewardTable gap(game.table_entries());
    for (std::size_t k = 0; k < gap.size(); ++k) gap[k] = game.reward_table(i)[k] - phi[k];
    const std::span<const RewardTable> channel(&gap, 1);

    std::vector<std::size_t> choice(n, 0);
    for (;;) {
      std::vector<TabularPolicy> profile;
      for (std::size_t j = 0; j < n; ++j) profile.push_back(grids[j][j == i ? 0 : choice[j]]);
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const auto& own : grids[i]) {
        profile[i] = own;
        const double d = evaluate_channels(game, JointPolicy(profile), channel).front();
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      alpha = std::max(alpha, hi - lo);
      std::size_t j = 0;
      for (; j < n; ++j) {
        if (j == i) continue;
        if (++choice[j] < grids[j].size()) break;
        choice[j] = 0;
      }
      if (j == n) break;
    }
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// Oracle comparison over a grid of w
// ---------------------------------------------------------------------------

struct OracleRow {
  double w = 0.0;
  bool tie = false;
  double oracle_value = 0.0;
  double computed_value = 0.0;
  double abs_error = 0.0;
  bool argmax_match = true;
};

/// Compares the exact pipeline's max_i F_i and cooperative maximizer with the
/// closed forms. Tie points are flagged and not evaluated.
inline std::vector<OracleRow> toy_oracle_comparison(std::span<const double> grid) {
  const MarkovGame game(toy_game());
  std::vector<OracleRow> rows;
  for (double w : grid) {
    OracleRow row;
    row.w = w;
    if (toy_maxF_curve().is_tie(w)) {
      row.tie = true;
      rows.push_back(row);
      continue;
    }
    const auto solution = solve_potential_exact(game, PotentialParams::scalar(w));
    row.oracle_value = toy_maxF(w);
    row.computed_value = solution.report.max_F();
    row.abs_error = std::abs(row.oracle_value - row.computed_value);
    if (std::abs(w - 1.0) > kTieTolerance) {
      const auto expected = toy_phi_argmax(w);
      const auto played = std::array<std::size_t, 2>{*solution.coop[0].as_deterministic().value().begin(),
                                                     *solution.coop[1].as_deterministic().value().begin()};
      row.argmax_match = played == expected;
    }
    rows.push_back(row);
  }
  return rows;
}

/// The grid {0.01, 0.02, ..., 0.99}.
inline std::vector<double> toy_oracle_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 99; ++k) grid.push_back(k / 100.0);
  return grid;
}

/// CSV with columns w, oracle_value, computed_value, abs_error; tie points
/// carry SKIPPED_TIE in the value columns.
inline std::string oracle_report_csv(std::span<const OracleRow> rows) {
  std::string out = "w,oracle_value,computed_value,abs_error\n";
  for (const auto& r : rows) {
    out += format_double(r.w);
    if (r.tie) {
      out += ",SKIPPED_TIE,SKIPPED_TIE,SKIPPED_TIE\n";
    } else {
      out += "," + format_double(r.oracle_value) + "," + format_double(r.computed_value) + "," +
             format_double(r.abs_error) + "\n";
    }
  }
  return out;
}

}  // namespace neppo

#endif  // NEPPO_ORACLES_HPP
