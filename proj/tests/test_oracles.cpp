#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "neppo/algorithm.hpp"
#include "neppo/oracles.hpp"
#include "reference.hpp"

using namespace neppo;

namespace {

const MarkovGame& toy() {
  static const MarkovGame g(toy_game());
  return g;
}

/// Random exact potential game: u_i(a) = Phi(a) + g_i(a_{-i}).
NormalFormGame random_potential_game(std::mt19937_64& gen, std::vector<std::size_t> counts,
                                     std::vector<double>& phi_out) {
  const JointActionSpace space(counts);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  phi_out.assign(space.size(), 0.0);
  for (auto& x : phi_out) x = u(gen);
  NormalFormGame g{counts, {}};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::vector<double> dummy(space.size());
    for (std::size_t a = 0; a < space.size(); ++a) {
      const std::size_t base = space.with_action(a, i, 0);
      if (base == a) dummy[a] = u(gen);
    }
    std::vector<double> payoff(space.size());
    for (std::size_t a = 0; a < space.size(); ++a) payoff[a] = phi_out[a] + dummy[space.with_action(a, i, 0)];
    g.payoff.push_back(payoff);
  }
  return g;
}

}  // namespace

TEST(ToyGame, Payoffs) {
  const auto g = toy_game();
  EXPECT_EQ(g.payoff_at(std::vector<std::size_t>{1, 0}), (std::vector<double>{0.5, 1.75}));
  EXPECT_EQ(g.payoff_at(std::vector<std::size_t>{0, 0}), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(g.payoff_at(std::vector<std::size_t>{0, 1}), (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(g.payoff_at(std::vector<std::size_t>{1, 1}), (std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(max_regret(toy(), JointPolicy::pure(toy(), std::vector<std::size_t>{0, 0})), 0.0);
  EXPECT_EQ(max_regret(toy(), JointPolicy::pure(toy(), std::vector<std::size_t>{1, 1})), 1.0);
}

TEST(ToyCurves, MaxFBranches) {
  EXPECT_EQ(toy_maxF(0.2), 2.0);
  EXPECT_EQ(toy_maxF(0.5), 0.625);
  EXPECT_EQ(toy_maxF(0.9), 0.0);
  EXPECT_EQ(toy_maxF(1.0), 0.0);
  EXPECT_EQ(toy_maxF(0.0), 2.5);
}

TEST(ToyCurves, TiePointsAreSetValued) {
  try {
    toy_maxF(1.0 / 3.0);
    FAIL() << "expected a set-valued error";
  } catch (const SetValuedError& e) {
    EXPECT_NEAR(e.lower(), 5.0 / 6.0, 1e-15);
    EXPECT_NEAR(e.upper(), 5.0 / 3.0, 1e-15);
  }
  try {
    toy_maxF(0.6);
    FAIL() << "expected a set-valued error";
  } catch (const SetValuedError& e) {
    EXPECT_EQ(e.lower(), 0.0);
    EXPECT_EQ(e.upper(), 0.5);
  }
  EXPECT_THROW(toy_F2(1.0), SetValuedError);
  EXPECT_THROW(toy_maxF(1.5), InvalidArgument);
  EXPECT_THROW(toy_maxF(-0.1), InvalidArgument);
}

TEST(ToyCurves, PerPlayerCurvesMatchPipeline) {
  for (int k = 1; k < 100; ++k) {
    const double w = k / 100.0;
    if (toy_maxF_curve().is_tie(w)) continue;
    const auto F = solve_potential_exact(toy(), PotentialParams::scalar(w)).report.F;
    EXPECT_NEAR(F[0], toy_F1(w), 1e-12) << w;
    EXPECT_NEAR(F[1], toy_F2(w), 1e-12) << w;
    EXPECT_DOUBLE_EQ(toy_maxF(w), std::max(toy_F1(w), toy_F2(w)));
  }
}

TEST(ToyCurves, TieIntervalsContainOneSidedLimits) {
  for (double tie : {1.0 / 3.0, 0.6}) {
    double lo = 0.0;
    double hi = 0.0;
    try {
      toy_maxF(tie);
    } catch (const SetValuedError& e) {
      lo = e.lower();
      hi = e.upper();
    }
    for (double side : {-1e-9, 1e-9}) {
      const double v = toy_maxF(tie + side);
      EXPECT_GE(v, lo - 1e-8);
      EXPECT_LE(v, hi + 1e-8);
    }
  }
}

TEST(ToyCurves, PhiArgmax) {
  EXPECT_EQ(toy_phi_argmax(0.2), (std::array<std::size_t, 2>{1, 1}));
  EXPECT_NEAR(toy_phi_max(0.2), 1.6, 1e-15);
  EXPECT_EQ(toy_phi_argmax(0.5), (std::array<std::size_t, 2>{1, 0}));
  EXPECT_EQ(toy_phi_max(0.5), 1.125);
  EXPECT_EQ(toy_phi_argmax(0.8), (std::array<std::size_t, 2>{0, 0}));
  EXPECT_EQ(toy_phi_max(0.8), 1.0);
  for (double tie : {1.0 / 3.0, 0.6, 1.0}) EXPECT_THROW(toy_phi_argmax(tie), SetValuedError);
}

TEST(ToyCurves, PhiMaxMatchesExactCoopValue) {
  for (int k = 0; k <= 100; ++k) {
    const double w = k / 100.0;
    const auto params = PotentialParams::scalar(w);
    const auto coop = solve_potential_exact(toy(), params).coop;
    EXPECT_NEAR(potential_value(params, toy(), coop), toy_phi_max(w), 1e-15) << w;
  }
}

TEST(PotentialCheck, ToyIsNotPotential) {
  const auto check = exact_potential_check(toy_game());
  EXPECT_FALSE(check.is_potential);
  ASSERT_TRUE(check.witness.has_value());
  EXPECT_EQ(check.witness->first_difference, -0.5);
  EXPECT_EQ(check.witness->second_difference, 0.75);
  EXPECT_EQ(check.witness->cycle_sum, 1.25);
  EXPECT_EQ(check.witness->profiles, (std::array<std::size_t, 4>{0, 2, 3, 1}));
}

TEST(PotentialCheck, MatchingPennies) {
  // Cycle (H,H) -> (T,H) -> (T,T) -> (H,T): player 1 differences 2 - (-2) = 4,
  // player 2 differences -2 - 2 = -4, so the cycle sum is -8.
  const NormalFormGame pennies{{2, 2}, {{1.0, -1.0, -1.0, 1.0}, {-1.0, 1.0, 1.0, -1.0}}};
  const auto check = exact_potential_check(pennies);
  EXPECT_FALSE(check.is_potential);
  EXPECT_EQ(check.witness->cycle_sum, -8.0);
}

TEST(PotentialCheck, IdenticalInterestRecoversPayoff) {
  std::mt19937_64 gen(71);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = ref::random_normal_form(gen, {3, 2, 2});
    g.payoff[1] = g.payoff[0];
    g.payoff[2] = g.payoff[0];
    const auto check = exact_potential_check(g);
    EXPECT_TRUE(check.is_potential);
    EXPECT_FALSE(check.witness.has_value());
    for (std::size_t a = 0; a < 12; ++a) EXPECT_NEAR(check.potential[a], g.payoff[0][a], 1e-10);
  }
}

TEST(PotentialCheck, ConstructedPotentialGames) {
  std::mt19937_64 gen(72);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> phi;
    const auto g = random_potential_game(gen, {2, 3, 2}, phi);
    const auto check = exact_potential_check(g);
    ASSERT_TRUE(check.is_potential);
    EXPECT_LE(check.residual, 1e-9);
    for (std::size_t a = 0; a < phi.size(); ++a) {
      EXPECT_NEAR(check.potential[a] - check.potential[0], phi[a] - phi[0], 1e-9);
    }
    // With the certified potential as the cooperative reward, every F_i
    // vanishes. A one-action bystander carries the potential as its reward so
    // that it is reachable as a convex weight.
    NormalFormGame augmented{{2, 3, 2, 1}, g.payoff};
    augmented.payoff.push_back(check.potential);
    const MarkovGame mg(augmented);
    const auto params = PotentialParams::convex({0.0, 0.0, 0.0});
    const auto coop = coop_game_solver(JointPolicy::uniform(mg), params, mg, {});
    std::vector<TabularPolicy> br;
    for (std::size_t i = 0; i < 4; ++i) br.push_back(best_response_exact(mg, i, coop).policy);
    const auto report = compute_F(params, mg, coop, br);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(report.F[i], 0.0, 1e-9);
  }
}

TEST(PotentialCheck, RandomGeneralSumGamesAreNotPotential) {
  std::mt19937_64 gen(73);
  for (int trial = 0; trial < 10; ++trial) {
    const auto check = exact_potential_check(ref::random_normal_form(gen, {2, 2}));
    EXPECT_FALSE(check.is_potential);
    ASSERT_TRUE(check.witness.has_value());
    EXPECT_GT(std::abs(check.witness->cycle_sum), 1e-9);
  }
}

TEST(PotentialCheck, CapacityLimit) {
  NormalFormGame big{{101, 100}, {std::vector<double>(10100, 0.0), std::vector<double>(10100, 0.0)}};
  EXPECT_THROW(exact_potential_check(big), CapacityError);
}

TEST(PureNash, Toy) {
  EXPECT_EQ(brute_force_pure_nash(toy_game()), (std::vector<std::vector<std::size_t>>{{0, 0}}));
}

TEST(PureNash, AgreesWithRegret) {
  std::mt19937_64 gen(74);
  for (int trial = 0; trial < 20; ++trial) {
    const auto nf = ref::random_normal_form(gen, {2, 3, 2});
    const MarkovGame g(nf);
    const auto ne = brute_force_pure_nash(nf);
    for (std::size_t a = 0; a < g.num_joint_actions(); ++a) {
      const auto actions = g.joint_actions().decode(a);
      const bool listed = std::find(ne.begin(), ne.end(), actions) != ne.end();
      EXPECT_EQ(listed, is_epsilon_nash(g, JointPolicy::pure(g, actions), 0.0));
    }
  }
}

TEST(AlphaEstimate, IdenticalInterestIsZero) {
  NormalFormGame g{{2, 2}, {{1.0, 0.0, 0.3, 2.0}, {1.0, 0.0, 0.3, 2.0}}};
  for (std::size_t res : {2u, 3u, 5u, 8u}) {
    EXPECT_NEAR(global_alpha_estimate(MarkovGame(g), PotentialParams::scalar(0.5), res), 0.0, 1e-12);
    EXPECT_NEAR(global_alpha_estimate(MarkovGame(g), PotentialParams::scalar(1.0), res), 0.0, 1e-12);
  }
}

TEST(AlphaEstimate, ToyIsNotCapturedGlobally) {
  EXPECT_GT(global_alpha_estimate(toy(), PotentialParams::scalar(0.8), 11), 0.0);
}

TEST(AlphaEstimate, PureGridMatchesHandComputation) {
  // Resolution 2 only admits pure strategies. With w = 0.8, D_1 = J_1 - Phi = 0.2 (J_1 - J_2)
  // and D_2 = J_2 - Phi = 0.8 (J_2 - J_1).
  const double alpha = global_alpha_estimate(toy(), PotentialParams::scalar(0.8), 2);
  const double d1 = std::max(std::abs(0.2 * (0.0 - 0.5) - 0.2 * (-1.25)), std::abs(0.2 * (-2.0) - 0.2 * 0.0));
  const double d2 = std::max(std::abs(0.8 * (-0.5) - 0.8 * 0.0), std::abs(0.8 * 1.25 - 0.8 * 2.0));
  EXPECT_NEAR(alpha, std::max(d1, d2), 1e-15);
}

TEST(AlphaEstimate, MonotoneInResolution) {
  std::mt19937_64 gen(75);
  for (int trial = 0; trial < 5; ++trial) {
    const MarkovGame g(ref::random_normal_form(gen, {2, 3}));
    double previous = 0.0;
    for (std::size_t res = 2; res <= 7; ++res) {
      const double a = global_alpha_estimate(g, PotentialParams::scalar(0.4), res);
      EXPECT_GE(a, previous);
      previous = a;
    }
  }
  const auto mg = ref::random_game(gen, {2, 2}, 2, 0.8);
  double previous = 0.0;
  for (std::size_t res = 2; res <= 4; ++res) {
    const double a = global_alpha_estimate(mg, PotentialParams::scalar(0.4), res);
    EXPECT_GE(a, previous);
    previous = a;
  }
}

TEST(AlphaEstimate, Errors) {
  EXPECT_THROW(global_alpha_estimate(toy(), PotentialParams::scalar(0.5), 1), InvalidArgument);
  EXPECT_THROW(global_alpha_estimate(toy(), PotentialParams::scalar(0.5), 2000), CapacityError);
}

TEST(OracleReport, GridComparison) {
  const auto rows = toy_oracle_comparison(toy_oracle_grid());
  EXPECT_EQ(rows.size(), 99u);
  std::size_t ties = 0;
  for (const auto& r : rows) {
    if (r.tie) {
      ++ties;
      continue;
    }
    EXPECT_LE(r.abs_error, 1e-9) << r.w;
    EXPECT_TRUE(r.argmax_match) << r.w;
  }
  EXPECT_EQ(ties, 1u);  // 0.6; 1/3 is not on the grid
}

TEST(OracleReport, CsvLayout) {
  const std::vector<double> grid{0.5, 1.0 / 3.0};
  const auto csv = oracle_report_csv(toy_oracle_comparison(grid));
  EXPECT_NE(csv.find("0.5,0.625,0.625,0\n"), std::string::npos);
  EXPECT_NE(csv.find("SKIPPED_TIE,SKIPPED_TIE,SKIPPED_TIE"), std::string::npos);
  EXPECT_EQ(csv.rfind("w,oracle_value,computed_value,abs_error\n", 0), 0u);
}
