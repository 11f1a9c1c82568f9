#include <doctest.h>

#include <cmath>

#include "bilin/bilin_ucb.hpp"
#include "bilin/envs.hpp"
#include "bilin/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bilin;

namespace {

BilinearSpec q_rank_spec(int H, int S, int A) {
  BilinearSpec spec;
  spec.family = Family::q_rank;
  spec.horizon = H;
  spec.num_states = S;
  spec.num_actions = A;
  spec.loss_bound = H + 1.0;
  return spec;
}

// {f*, f_bad} on the deterministic two-state instance: f_bad claims reward for staying put.
HypothesisClass truth_and_liar(const TabularMdp& m) {
  HypothesisClass cls;
  cls.members.push_back(fixture::optimal_member(0, m));
  // Q tables [h][s][a]: claims 2.0 for action 0 in state 0 at h=0 and 1.0 at h=1.
  cls.members.push_back(fixture::q_member(1, 2, 2, 2, {2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0}));
  cls.truth_index = 0;
  return cls;
}

}  // namespace

TEST_SUITE("bilin_ucb") {
  TEST_CASE("generalization error formulas") {
    CHECK(eps_gen_finite(2.0, 1.0, 1) == doctest::Approx(2.0));
    CHECK(eps_gen_finite(40.0, 7.0, 3) == doctest::Approx(2.0 * eps_gen_finite(160.0, 7.0, 3)));
    CHECK(conf_finite(0.1) == doctest::Approx(std::sqrt(std::log(10.0))));
    const double l = std::log(2.0 * 5.0 * 9.0);
    CHECK(eps_gen_witness(100.0, std::log(5.0), std::log(9.0), 2) ==
          doctest::Approx(std::sqrt(2.0 * 2.0 * l / 100.0) + 2.0 * 2.0 * l / 300.0));
    CHECK(conf_witness(0.05) == doctest::Approx(std::log(20.0)));
    CHECK(eps_gen_hoeffding(50.0, std::log(4.0), 3.0) == doctest::Approx(std::sqrt(2.0) * 3.0 * std::sqrt((1.0 + std::log(4.0)) / 50.0)));
  }

  TEST_CASE("parameter schedule closed forms") {
    // eps_gen = sqrt(3) B_X B_W makes the log argument 2.
    const double m = 8.0 / 3.0;  // eps_gen_finite(m, 1, 1) = sqrt(3)
    REQUIRE(eps_gen_finite(m, 1.0, 1) == doctest::Approx(std::sqrt(3.0)));
    for (int d : {1, 2, 5}) {
      const auto p = set_parameters(d, 1.0, 1.0, m, 0.1, 1.0, 1);
      CHECK(p.T == static_cast<int>(std::ceil(3.0 * d * std::log(2.0))));
    }
    const auto q = set_parameters(1, 1.0, 1.0, 8.0, 0.1, 1.0, 1);
    CHECK(q.eps_gen == doctest::Approx(1.0));
    CHECK(q.T == 5);
    CHECK(q.R == doctest::Approx(std::sqrt(5.0) * 1.0 * std::sqrt(std::log(5.0 / 0.1))));
    // Horizon multiplies the per-step count.
    const auto r = set_parameters(2, 1.5, 0.5, 300.0, 0.05, 10.0, 3);
    const double eps = eps_gen_finite(300.0, 10.0, 3);
    CHECK(r.iterations_per_step == static_cast<int>(std::ceil(6.0 * std::log(1.0 + 3.0 * 2.25 * 0.25 / (eps * eps)))));
    CHECK(r.T == 3 * r.iterations_per_step);
    CHECK(r.R == doctest::Approx(std::sqrt(r.T) * eps * std::sqrt(std::log(r.T * 3 / 0.05))));
    CHECK_THROWS_AS(set_parameters(1, 1.0, 1.0, 8.0, 0.5, 1.0, 1), Error);
  }

  TEST_CASE("constrained argmax") {
    const auto m = fixture::deterministic_two_state(2);
    const auto cls = truth_and_liar(m);
    VersionSpace vs(2, 2, m.initial_state());
    // Unconstrained and t = 0 both pick the largest claimed value.
    CHECK(solve_constrained_argmax(cls, vs, std::numeric_limits<double>::infinity()).id() == 1);
    CHECK(solve_constrained_argmax(cls, vs, 0.0).id() == 1);
    vs.add(1, {{0.0, 0.9}, {0.0, 0.4}});
    CHECK(solve_constrained_argmax(cls, vs, 0.5).id() == 0);
    CHECK(solve_constrained_argmax(cls, vs, 1.0).id() == 1);
    CHECK(feasible_count(cls, vs, 0.5) == 1);
    vs.add(0, {{0.6, 0.0}, {0.0, 0.0}});
    try {
      solve_constrained_argmax(cls, vs, 0.5);
      FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
      CHECK(e.code() == ErrorCode::InfeasibleProgram);
      CHECK(e.iteration() == 2);
    }
  }

  TEST_CASE("ties go to the lowest member id") {
    const auto m = fixture::deterministic_two_state(2);
    HypothesisClass cls;
    cls.members.push_back(fixture::q_member(0, 2, 2, 2, std::vector<double>(8, 0.5)));
    cls.members.push_back(fixture::q_member(1, 2, 2, 2, std::vector<double>(8, 0.5)));
    VersionSpace vs(2, 2, m.initial_state());
    CHECK(solve_constrained_argmax(cls, vs, 1.0).id() == 0);
  }

  TEST_CASE("batch collection") {
    const auto m = fixture::deterministic_two_state(3);
    const auto cls = truth_and_liar(fixture::deterministic_two_state(2));
    auto spec = q_rank_spec(3, 2, 2);
    const auto f = fixture::optimal_member(0, m);
    Rng rng = make_rng(1, 0, "collect");
    const auto data = collect_batch(m, f, spec, 3, rng);
    REQUIRE(data.size() == 3);
    for (int h = 0; h < 3; ++h) {
      REQUIRE(data[h].observations.size() == 3);
      for (const auto& o : data[h].observations) {
        CHECK(o.step == h);
        CHECK(o == data[h].observations.front());
      }
    }
    CHECK(batch_trajectories(spec, 3) == 3);

    Rng gen = make_rng(2, 0, "collect");
    const auto r = random_tabular_mdp(3, 2, 3, gen);
    spec.estimation = EstimationRule::uniform;
    const auto g = fixture::optimal_member(0, r);
    const auto u = collect_batch(r, g, spec, 10000, rng);
    for (int h = 0; h < 3; ++h) {
      REQUIRE(u[h].observations.size() == 10000);
      double ones = 0.0;
      for (const auto& o : u[h].observations) ones += o.action;
      CHECK(std::abs(ones / 10000 - 0.5) <= 0.02);
    }
    CHECK(batch_trajectories(spec, 10) == 30);
  }

  TEST_CASE("two-member class returns the optimal policy") {
    const auto m = fixture::deterministic_two_state(2);
    const auto cls = truth_and_liar(m);
    const auto spec = q_rank_spec(2, 2, 2);
    UcbParams p;
    p.T = 3;
    p.R = 0.5;
    p.m = 5;
    p.n_eval = 20;
    const auto res = run(m, cls, spec, p);
    CHECK(res.iterations[0].member == 1);
    CHECK(res.iterations[1].member == 0);
    CHECK(res.chosen_member == 0);
    CHECK(res.chosen_value == oracle::optimal_value(m));
    CHECK(res.trajectories == 15);
    CHECK(res.eval_trajectories == 60);
    CHECK(res.truth_always_feasible());
  }

  TEST_CASE("singleton class") {
    Rng gen = make_rng(3, 0, "single");
    const auto m = random_tabular_mdp(4, 2, 3, gen);
    HypothesisClass cls;
    cls.members.push_back(fixture::optimal_member(0, m));
    cls.truth_index = 0;
    UcbParams p;
    p.T = 2;
    p.m = 10;
    p.n_eval = 4000;
    const auto res = run(m, cls, q_rank_spec(3, 4, 2), p);
    CHECK(res.chosen_iteration == 0);
    CHECK(res.chosen_member == 0);
    CHECK(std::abs(res.chosen_value - oracle::optimal_value(m)) <= res.chosen_half_width);
  }

  TEST_CASE("trajectory accounting, determinism and optimism") {
    const auto b = make_q_rank(5, 2, 3, 10, 4);
    UcbParams p;
    p.T = 6;
    p.m = 30;
    p.R = 1.0;
    p.n_eval = 100;
    p.seed = 9;
    p.auto_relax = true;
    const auto a = run(*b.mdp, *b.cls, *b.spec, p);
    const auto c = run(*b.mdp, *b.cls, *b.spec, p);
    CHECK(a.trajectories == 6u * 30u);
    REQUIRE(a.iterations.size() == c.iterations.size());
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
      CHECK(a.iterations[i].member == c.iterations[i].member);
      CHECK(a.iterations[i].mc_mean == c.iterations[i].mc_mean);
      CHECK(a.iterations[i].feasible_count == c.iterations[i].feasible_count);
    }
    CHECK(a.chosen_member == c.chosen_member);
    for (const auto& it : a.iterations) {
      if (it.truth_slack && *it.truth_slack >= 0.0) CHECK(it.optimistic_value >= b.meta.v_star);
    }
    const auto v = make_v_rank(4, 2, 3, 6, 4);
    p.auto_relax = true;
    CHECK(run(*v.mdp, *v.cls, *v.spec, p).trajectories == 6u * 30u * 3u);
  }

  TEST_CASE("feasible set shrinks under a fixed radius") {
    const auto b = make_tabular_mixture(4, 2, 3, 3, 0.25, 5);
    VersionSpace vs(3, b.cls->size(), b.mdp->initial_state());
    Rng rng = make_rng(5, 0, "shrink");
    const double R = 0.3;
    std::vector<char> prev(b.cls->size(), 1);
    for (int t = 0; t < 6; ++t) {
      const auto& f = (*b.cls)[static_cast<std::size_t>(t * 7) % b.cls->size()];
      const auto data = collect_batch(*b.mdp, f, *b.spec, 200, rng);
      std::vector<std::vector<double>> losses(3);
      for (int h = 0; h < 3; ++h) losses[h] = batch_losses(data[h], f, *b.cls, *b.spec);
      vs.add(f.id(), losses);
      for (std::size_t g = 0; g < b.cls->size(); ++g) {
        const bool now = vs.feasible(g, R);
        if (now) CHECK(prev[g]);
        prev[g] = now ? 1 : 0;
      }
    }
  }

  TEST_CASE("generalized runner reduces to the plain runner") {
    const auto b = make_q_rank(5, 2, 3, 10, 6);
    UcbParams p;
    p.T = 5;
    p.m = 40;
    p.R = 2.0;
    p.n_eval = 50;
    p.seed = 3;
    p.spot_check_every = 1;
    const auto a = run(*b.mdp, *b.cls, *b.spec, p);
    const auto g = run_generalized(*b.mdp, *b.cls, *b.spec, p);
    REQUIRE(a.iterations.size() == g.iterations.size());
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
      CHECK(a.iterations[i].member == g.iterations[i].member);
      CHECK(a.iterations[i].mc_mean == g.iterations[i].mc_mean);
      CHECK(a.iterations[i].optimistic_value == g.iterations[i].optimistic_value);
      CHECK(a.iterations[i].truth_slack == g.iterations[i].truth_slack);
    }
    CHECK(a.chosen_member == g.chosen_member);
    CHECK(a.trajectories == g.trajectories);
  }

  TEST_CASE("plain runner rejects discriminator classes") {
    const auto b = make_witness(2, 2, 2, 4, 1);
    UcbParams p;
    CHECK_THROWS_AS(run(*b.mdp, *b.cls, *b.spec, p), Error);
    CHECK_NOTHROW(run_generalized(*b.mdp, *b.cls, *b.spec, p));
  }

  TEST_CASE("infeasible programs surface or relax") {
    const auto b = make_q_rank(5, 2, 3, 10, 7);
    UcbParams p;
    p.T = 3;
    p.m = 200;
    p.R = 0.0;
    p.n_eval = 20;
    CHECK_THROWS_AS(run(*b.mdp, *b.cls, *b.spec, p), InfeasibleError);
    // Doubling cannot move a zero radius.
    p.auto_relax = true;
    CHECK_THROWS_AS(run(*b.mdp, *b.cls, *b.spec, p), InfeasibleError);
    p.R = 1e-3;
    const auto res = run(*b.mdp, *b.cls, *b.spec, p);
    CHECK(res.relaxations > 0);
    CHECK(res.final_radius == doctest::Approx(1e-3 * std::pow(2.0, res.relaxations)));
  }

  TEST_CASE("factored instance end to end") {
    const auto b = make_factored(2, 2, {}, 2, 3, 2, 4);
    UcbParams p;
    p.T = 8;
    p.m = 300;
    p.R = 0.6;
    p.n_eval = 2000;
    p.seed = 1;
    p.auto_relax = true;
    const auto res = run_generalized(*b.mdp, *b.cls, *b.spec, p);
    const double value = evaluate_policy_exact(*b.mdp, greedy_policy((*b.cls)[res.chosen_member])).v_at(0, 0);
    CHECK(b.meta.v_star - value <= 0.05 + 1e-9);
  }
}
