#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "neppo/oracles.hpp"
#include "neppo/solvers.hpp"
#include "reference.hpp"

using namespace neppo;

namespace {

const MarkovGame& toy() {
  static const MarkovGame g(toy_game());
  return g;
}

const SolverBudget kExact{SolverMode::Exact, 1, 1.0};

SolverBudget iterative(std::size_t iterations, double lr, std::size_t episodes = 0, std::uint64_t seed = 0) {
  SolverBudget b;
  b.mode = SolverMode::Iterative;
  b.iterations = iterations;
  b.learning_rate = lr;
  b.episodes = episodes;
  b.seed = seed;
  return b;
}

std::vector<std::size_t> pure_actions(const JointPolicy& pi) {
  std::vector<std::size_t> out;
  for (const auto& p : pi.policies()) out.push_back(p.as_deterministic().value().front());
  return out;
}

}  // namespace

TEST(SolverBudget, Validation) {
  EXPECT_THROW(iterative(0, 0.1).validate(), InvalidArgument);
  EXPECT_THROW(iterative(5, 0.0).validate(), InvalidArgument);
  EXPECT_NO_THROW(iterative(5, 0.1).validate());
  SolverBudget exact = kExact;
  exact.learning_rate = 0.0;
  EXPECT_NO_THROW(exact.validate());
}

TEST(CoopSolver, ToyExactMaximizers) {
  const auto uniform = JointPolicy::uniform(toy());
  EXPECT_EQ(pure_actions(coop_game_solver(uniform, PotentialParams::scalar(0.2), toy(), kExact)),
            (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(pure_actions(coop_game_solver(uniform, PotentialParams::scalar(0.5), toy(), kExact)),
            (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(pure_actions(coop_game_solver(uniform, PotentialParams::scalar(0.8), toy(), kExact)),
            (std::vector<std::size_t>{0, 0}));
}

TEST(CoopSolver, ExactIgnoresWarmStart) {
  const auto a = coop_game_solver(JointPolicy::uniform(toy()), PotentialParams::scalar(0.5), toy(), kExact);
  const auto b = coop_game_solver(JointPolicy::pure(toy(), std::vector<std::size_t>{0, 1}),
                                  PotentialParams::scalar(0.5), toy(), kExact);
  EXPECT_EQ(a, b);
}

TEST(CoopSolver, ExactDominatesRandomJointPolicies) {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = ref::random_game(gen, {2, 3}, 3, 0.9);
    const auto params = PotentialParams::scalar(u(gen));
    const auto best = coop_game_solver(JointPolicy::uniform(g), params, g, kExact);
    const double value = potential_value(params, g, best);
    for (int k = 0; k < 100; ++k) EXPECT_GE(value, potential_value(params, g, ref::random_joint(gen, g)) - 1e-9);
  }
}

TEST(CoopSolver, ExactMatchesEnumeration) {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = ref::random_game(gen, {2, 2}, 3, 0.85, -1.0, 1.0);
    const auto params = PotentialParams::scalar(0.3);
    const auto table = potential_reward_table(params, g);
    const auto best = coop_game_solver(JointPolicy::uniform(g), params, g, kExact);
    EXPECT_NEAR(potential_value(params, g, best), ref::best_shared_value(g, table), 1e-9);
  }
}

TEST(CoopSolver, IterativeMonotoneUnderStableStep) {
  for (int k = 1; k < 100; ++k) {
    const double w = k / 100.0;
    const auto params = PotentialParams::scalar(w);
    const double step = stable_policy_gradient_step(toy().max_abs_reward(), toy().discount());
    const auto uniform = JointPolicy::uniform(toy());
    double previous = potential_value(params, toy(), uniform);
    JointPolicy pi = uniform;
    for (int it = 0; it < 25; ++it) {
      pi = coop_game_solver(pi, params, toy(), iterative(1, step));
      const double value = potential_value(params, toy(), pi);
      EXPECT_GE(value, previous - 1e-12) << "w = " << w << ", iteration " << it;
      previous = value;
    }
  }
}

TEST(CoopSolver, IterativeMonotoneOnMarkovGame) {
  std::mt19937_64 gen(43);
  const auto g = ref::random_game(gen, {2, 2}, 3, 0.7);
  const auto params = PotentialParams::scalar(0.4);
  const double step = stable_policy_gradient_step(g.max_abs_reward(), g.discount());
  JointPolicy pi = JointPolicy::uniform(g);
  double previous = potential_value(params, g, pi);
  for (int it = 0; it < 20; ++it) {
    pi = coop_game_solver(pi, params, g, iterative(1, step));
    const double value = potential_value(params, g, pi);
    EXPECT_GE(value, previous - 1e-12);
    previous = value;
  }
}

TEST(CoopSolver, IterativeApproachesExactOptimum) {
  const auto params = PotentialParams::scalar(0.8);
  const auto pi = coop_game_solver(JointPolicy::uniform(toy()), params, toy(), iterative(2000, 1.0));
  EXPECT_NEAR(potential_value(params, toy(), pi), toy_phi_max(0.8), 1e-3);
}

TEST(RlSolver, ToyExactBestResponses) {
  const auto profile = JointPolicy::pure(toy(), std::vector<std::size_t>{1, 0});
  EXPECT_EQ(rl_solver(TabularPolicy::uniform(0, 1, 2), profile, toy(), kExact).as_deterministic(),
            std::vector<std::size_t>{0});
  EXPECT_EQ(rl_solver(TabularPolicy::uniform(1, 1, 2), profile, toy(), kExact).as_deterministic(),
            std::vector<std::size_t>{1});
}

TEST(RlSolver, ExactAgreesWithBestResponse) {
  std::mt19937_64 gen(44);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = ref::random_game(gen, {3, 2}, 3, 0.9);
    const auto pi = ref::random_joint(gen, g);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto br = rl_solver(pi[i], pi, g, kExact);
      EXPECT_EQ(br, best_response_exact(g, i, pi).policy);
    }
  }
}

TEST(RlSolver, ExactDominatesIterative) {
  std::mt19937_64 gen(45);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = ref::random_game(gen, {3, 2}, 3, 0.8);
    const auto pi = ref::random_joint(gen, g);
    const double exact = evaluate_exact(g, pi.with_policy(rl_solver(pi[0], pi, g, kExact)))[0];
    for (std::size_t iters : {1u, 10u, 100u}) {
      const auto approx = rl_solver(pi[0], pi, g, iterative(iters, 0.5));
      EXPECT_GE(exact, evaluate_exact(g, pi.with_policy(approx))[0] - 1e-9);
    }
  }
}

TEST(RlSolver, TinyStepReturnsWarmStart) {
  std::mt19937_64 gen(46);
  const auto g = ref::random_game(gen, {3, 2}, 3, 0.8);
  const auto pi = ref::random_joint(gen, g);
  const auto out = rl_solver(pi[0], pi, g, iterative(1, 1e-12));
  for (std::size_t k = 0; k < out.table().size(); ++k) EXPECT_NEAR(out.table()[k], pi[0].table()[k], 1e-9);
}

TEST(RlSolver, IterativeConvergesOnSinglePlayer) {
  std::mt19937_64 gen(47);
  const auto g = ref::random_game(gen, {3}, 3, 0.8);
  const auto uniform = JointPolicy::uniform(g);
  const auto learned = rl_solver(uniform[0], uniform, g, iterative(100000, 10.0));
  EXPECT_NEAR(evaluate_exact(g, JointPolicy({learned}))[0], best_response_exact(g, 0, uniform).value, 1e-6);
}

TEST(RlSolver, WarmStartDeterminism) {
  std::mt19937_64 gen(48);
  const auto g = ref::random_game(gen, {2, 2}, 3, 0.8);
  const auto pi = ref::random_joint(gen, g);
  EXPECT_EQ(rl_solver(pi[1], pi, g, iterative(20, 0.3)), rl_solver(pi[1], pi, g, iterative(20, 0.3)));
  EXPECT_EQ(rl_solver(pi[1], pi, g, iterative(20, 0.3, 50, 9)), rl_solver(pi[1], pi, g, iterative(20, 0.3, 50, 9)));
  const auto params = PotentialParams::scalar(0.25);
  EXPECT_EQ(coop_game_solver(pi, params, g, iterative(20, 0.3, 30, 4)),
            coop_game_solver(pi, params, g, iterative(20, 0.3, 30, 4)));
}

TEST(GradientStatistics, SampledApproachesExact) {
  std::mt19937_64 gen(49);
  const auto g = ref::random_game(gen, {3}, 2, 0.5);
  const auto policy = ref::random_policy(gen, 0, 2, 3);
  const FiniteMdp mdp = induced_mdp(g, g.reward_table(0), JointPolicy({policy}), 0);
  const auto exact = exact_gradient_statistics(mdp, policy.table());
  const auto sampled = sampled_gradient_statistics(mdp, policy.table(), 40000, CounterRng(3));
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_NEAR(sampled.occupancy[s], exact.occupancy[s], 0.03);
    for (std::size_t a = 0; a < 3; ++a) {
      EXPECT_NEAR(sampled.occupancy[s] * sampled.advantage[s * 3 + a], exact.occupancy[s] * exact.advantage[s * 3 + a],
                  0.05);
    }
  }
}

TEST(GradientStatistics, ExactMatchesFiniteDifferences) {
  // d J / d theta(s,a) = d(s) pi(a|s) A(s,a) for softmax logits.
  std::mt19937_64 gen(50);
  const auto g = ref::random_game(gen, {3}, 3, 0.8);
  const auto policy = ref::random_policy(gen, 0, 3, 3);
  const FiniteMdp mdp = induced_mdp(g, g.reward_table(0), JointPolicy({policy}), 0);
  const auto stats = exact_gradient_statistics(mdp, policy.table());
  const auto logits = detail::logits_from_policy(policy);
  auto J = [&](const std::vector<double>& theta) {
    return ref::series_value(g, JointPolicy({detail::policy_from_logits(0, 3, 3, theta)}), 0);
  };
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      const double analytic = stats.occupancy[s] * policy.prob(s, a) * stats.advantage[s * 3 + a];
      EXPECT_NEAR(analytic, ref::central_difference(J, logits, s * 3 + a), 1e-7);
    }
  }
}

TEST(Solvers, CapacityErrors) {
  const std::size_t S = kMaxExactStates + 1;
  std::vector<double> transition(S * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) transition[s * S + s] = 1.0;
  std::vector<double> rho(S, 1.0 / static_cast<double>(S));
  const MarkovGame g({1}, S, transition, {RewardTable(S, 1.0)}, 0.5, rho);
  const auto uniform = JointPolicy::uniform(g);
  EXPECT_THROW(coop_game_solver(uniform, PotentialParams::convex({}), g, kExact), CapacityError);
  EXPECT_THROW(rl_solver(uniform[0], uniform, g, kExact), CapacityError);
}
