#include <doctest.h>

#include <cmath>

#include "bilin/envs.hpp"
#include "bilin/error.hpp"
#include "bilin/mdp.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bilin;

TEST_SUITE("mdp") {
  TEST_CASE("constant chain return") {
    const auto m = fixture::constant_chain(2, 0.3);
    Rng rng = make_rng(1, 0, "mdp");
    const auto tr = sample_episode(m, UniformPolicy(1), rng);
    CHECK(tr.total_return == doctest::Approx(0.6));
    REQUIRE(tr.steps.size() == 2);
    CHECK(tr.steps[0].step == 0);
    CHECK(tr.steps[1].step == 1);
  }

  TEST_CASE("sampled transitions follow the kernel") {
    const auto m = fixture::two_state(2);
    Rng rng = make_rng(2, 0, "mdp");
    const int n = 100000;
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) {
        int to_one = 0;
        for (int i = 0; i < n; ++i) to_one += m.transition(0, State::tabular(s), a, rng).id == 1 ? 1 : 0;
        double p1 = 0.0;
        for (const auto& t : m.transition_probs(0, s, a)) p1 += t.next == 1 ? t.prob : 0.0;
        CHECK(std::abs(static_cast<double>(to_one) / n - p1) <= 0.01);
      }
    }
  }

  TEST_CASE("episodes have H steps and bounded returns") {
    Rng gen = make_rng(3, 0, "mdp");
    const auto m = random_tabular_mdp(4, 3, 5, gen);
    Rng rng = make_rng(3, 1, "mdp");
    for (int i = 0; i < 500; ++i) {
      const auto tr = sample_episode(m, UniformPolicy(3), rng);
      REQUIRE(tr.steps.size() == 5);
      CHECK(tr.steps.front().state == m.initial_state());
      for (int h = 0; h < 5; ++h) {
        CHECK(tr.steps[h].step == h);
        CHECK(tr.steps[h].reward >= 0.0);
        CHECK(tr.steps[h].reward <= 1.0);
        CHECK(tr.steps[h].action >= 0);
        CHECK(tr.steps[h].action < 3);
        if (h > 0) CHECK(tr.steps[h].state == tr.steps[h - 1].next_state);
      }
      CHECK(tr.total_return >= 0.0);
      CHECK(tr.total_return <= 5.0);
    }
  }

  TEST_CASE("bernoulli rewards stay in the unit interval with the configured mean") {
    auto m = fixture::constant_chain(1, 0.25);
    m.set_bernoulli_rewards(true);
    Rng rng = make_rng(4, 0, "mdp");
    double total = 0.0;
    for (int i = 0; i < 40000; ++i) {
      const double r = m.reward(0, State::tabular(0), 0, rng);
      CHECK((r == 0.0 || r == 1.0));
      total += r;
    }
    CHECK(std::abs(total / 40000 - 0.25) <= 0.01);
  }

  TEST_CASE("roll-in at step zero starts at s0") {
    const auto m = fixture::two_state(3);
    Rng rng = make_rng(5, 0, "mdp");
    for (int i = 0; i < 100; ++i) {
      CHECK(rollin_then_estimate(m, UniformPolicy(2), UniformPolicy(2), 0, rng).state == m.initial_state());
    }
  }

  TEST_CASE("deterministic roll-in reaches the unique state") {
    const auto m = fixture::deterministic_two_state(3);
    const auto always_one = TablePolicy::constant(3, 2, 1);
    Rng rng = make_rng(6, 0, "mdp");
    const auto o = rollin_then_estimate(m, always_one, always_one, 2, rng);
    CHECK(o.state.id == 1);
    CHECK(o.step == 2);
  }

  TEST_CASE("uniform estimation action marginal") {
    Rng gen = make_rng(7, 0, "mdp");
    const auto m = random_tabular_mdp(3, 2, 3, gen);
    Rng rng = make_rng(7, 1, "mdp");
    const auto rollin = TablePolicy::constant(3, 3, 0);
    int ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ones += rollin_then_estimate(m, rollin, UniformPolicy(2), 2, rng).action;
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) <= 0.01);
  }

  TEST_CASE("roll-in marginal matches truncated episodes") {
    Rng gen = make_rng(8, 0, "mdp");
    const auto m = random_tabular_mdp(3, 2, 4, gen);
    const UniformPolicy pi(2);
    Rng a = make_rng(8, 1, "mdp");
    Rng b = make_rng(8, 2, "mdp");
    const int n = 100000;
    std::vector<double> f1(3, 0.0), f2(3, 0.0);
    for (int i = 0; i < n; ++i) {
      f1[rollin_then_estimate(m, pi, pi, 2, a).state.id] += 1.0 / n;
      f2[sample_episode(m, pi, b).steps[2].state.id] += 1.0 / n;
    }
    const auto exact = state_occupancy(m, pi)[2];
    for (int s = 0; s < 3; ++s) {
      CHECK(std::abs(f1[s] - f2[s]) <= 0.01);
      CHECK(std::abs(f1[s] - exact[s]) <= 0.01);
    }
  }

  TEST_CASE("monte carlo on deterministic instances is exact") {
    const auto m = fixture::deterministic_two_state(4);
    const auto pi = TablePolicy::constant(4, 2, 1);
    for (std::size_t n : {1u, 7u, 100u}) {
      Rng rng = make_rng(9, n, "mdp");
      const auto est = monte_carlo_value(m, pi, n, rng);
      CHECK(est.mean == 3.0);
      CHECK(est.half_width == doctest::Approx(4.0 * std::sqrt(std::log(2.0 / 0.01) / (2.0 * n))));
    }
    const auto zero = fixture::constant_chain(3, 0.0);
    Rng rng = make_rng(9, 0, "mdp");
    CHECK(monte_carlo_value(zero, UniformPolicy(1), 50, rng).mean == 0.0);
  }

  TEST_CASE("monte carlo confidence interval coverage") {
    const auto m = fixture::two_state(3);
    const UniformPolicy pi(2);
    const double exact = evaluate_policy_exact(m, pi).v_at(0, 0);
    Rng rng = make_rng(10, 0, "mdp");
    int covered = 0;
    for (int rep = 0; rep < 1000; ++rep) {
      const auto est = monte_carlo_value(m, pi, 200, rng);
      covered += std::abs(est.mean - exact) <= est.half_width ? 1 : 0;
    }
    CHECK(covered >= 990);
  }

  TEST_CASE("parallel monte carlo is reproducible per worker count") {
    const auto m = fixture::two_state(3);
    const UniformPolicy pi(2);
    const auto a = monte_carlo_value_parallel(m, pi, 5000, 42, 4);
    const auto b = monte_carlo_value_parallel(m, pi, 5000, 42, 4);
    CHECK(a.mean == b.mean);
    CHECK(a.n == 5000);
    const double exact = evaluate_policy_exact(m, pi).v_at(0, 0);
    CHECK(std::abs(a.mean - exact) <= a.half_width);
  }

  TEST_CASE("value iteration examples") {
    const auto zero = fixture::constant_chain(3, 0.0);
    const auto z = value_iteration(zero);
    for (double q : z.values.q) CHECK(q == 0.0);
    for (double v : z.values.v) CHECK(v == 0.0);

    TabularMdp one(1, 2, 1);
    one.set_transitions(0, 0, 0, {{0, 1.0}});
    one.set_transitions(0, 0, 1, {{0, 1.0}});
    one.set_reward(0, 0, 0, 0.2);
    one.set_reward(0, 0, 1, 0.9);
    const auto s = value_iteration(one);
    CHECK(s.values.v_at(0, 0) == 0.9);
    CHECK(s.policy.action(0, 0) == 1);
  }

  TEST_CASE("value iteration satisfies the Bellman optimality equations") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng gen = make_rng(seed, 0, "vi");
      const auto m = random_tabular_mdp(6, 3, 4, gen, 3);
      const auto sol = value_iteration(m);
      for (int h = 0; h < 4; ++h) {
        for (int s = 0; s < 6; ++s) {
          double best = -1.0;
          for (int a = 0; a < 3; ++a) {
            double target = m.expected_reward(h, State::tabular(s), a);
            for (const auto& t : m.transition_probs(h, s, a)) target += t.prob * sol.values.v_at(h + 1, t.next);
            CHECK(std::abs(sol.values.q_at(h, s, a) - target) <= 1e-12);
            best = std::max(best, sol.values.q_at(h, s, a));
          }
          CHECK(sol.values.v_at(h, s) == best);
        }
      }
      for (int s = 0; s < 6; ++s) CHECK(sol.values.v_at(4, s) == 0.0);
      CHECK(sol.values.v_at(0, 0) == doctest::Approx(oracle::optimal_value(m)).epsilon(1e-12));
    }
  }

  TEST_CASE("exact policy evaluation and occupancy agree with forward recursion") {
    Rng gen = make_rng(11, 0, "mdp");
    const auto m = random_tabular_mdp(5, 2, 4, gen);
    const auto f = fixture::optimal_member(0, m);
    const GreedyPolicy pi(f);
    CHECK(evaluate_policy_exact(m, pi).v_at(0, 0) == doctest::Approx(oracle::policy_value(m, f)).epsilon(1e-12));
    const auto occ = state_occupancy(m, pi);
    for (int h = 0; h < 4; ++h) {
      const auto d = oracle::rollin_states(m, f, h);
      for (int s = 0; s < 5; ++s) CHECK(occ[h][s] == doctest::Approx(d[s]).epsilon(1e-12));
    }
  }

  TEST_CASE("invalid rows are rejected") {
    TabularMdp m(2, 1, 1);
    CHECK_THROWS(m.set_transitions(0, 0, 0, {{0, 0.5}, {1, 0.4}}));
  }
}
