#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bilin/bilin_ucb.hpp"
#include "bilin/bilinear.hpp"
#include "bilin/envs.hpp"
#include "bilin/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bilin;

namespace {

Observation obs(int h, int s, int a, double r, int next) {
  Observation o;
  o.step = h;
  o.state = State::tabular(s);
  o.action = a;
  o.reward = r;
  o.next_state = State::tabular(next);
  return o;
}

// Constant one-dimensional feature.
class UnitFeature final : public FeatureMap {
 public:
  using FeatureMap::phi;
  std::size_t phi_dim() const override { return 1; }
  void phi(int, const State&, int, std::span<double> out) const override { out[0] = 1.0; }
};

double mc_band(double bound, std::size_t m) { return bound * std::sqrt(2.0 * std::log(2.0 / 0.01) / m); }

Dataset on_step(const std::vector<Dataset>& batch, int h) { return batch[static_cast<std::size_t>(h)]; }

}  // namespace

TEST_SUITE("bilinear") {
  TEST_CASE("q-rank arithmetic") {
    // H=2, S=2, A=1: Q_0(0)=1.0, Q_1(1)=0.5.
    const auto g = fixture::q_member(0, 2, 2, 1, {1.0, 0.0, 0.0, 0.5});
    CHECK(discrepancy_q_rank(obs(0, 0, 0, 0.3, 1), g) == doctest::Approx(0.2));
    // Last step uses V_H = 0.
    CHECK(discrepancy_q_rank(obs(1, 1, 0, 0.1, 0), g) == doctest::Approx(0.4));
  }

  TEST_CASE("v-rank arithmetic") {
    // Q_0(0,.) = (1.0, 0.2) so pi_g(0) = 0 and V_0(0) = 1; V_1(1) = 0.4.
    const auto g = fixture::q_member(0, 2, 2, 2, {1.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.4, 0.1});
    CHECK(discrepancy_v_rank(obs(0, 0, 0, 0.0, 1), g, 2) == doctest::Approx(1.2));
    CHECK(discrepancy_v_rank(obs(0, 0, 1, 0.0, 1), g, 2) == 0.0);
  }

  TEST_CASE("linear Q/V arithmetic") {
    const OneHotFeatures feats = OneHotFeatures::identity(2, 1);
    Payload p;
    p.w = {{0.7, 0.0}};
    p.theta = {{0.0, 0.0}};
    const auto g = Hypothesis(0, HypothesisKind::q_only, ValueTables::zeros(1, 2, 1), p);
    CHECK(discrepancy_linear_qv(obs(0, 0, 0, 0.7, 1), g, feats, 1) == doctest::Approx(0.0));
  }

  TEST_CASE("Bellman-complete arithmetic") {
    const OneHotFeatures feats = OneHotFeatures::identity(2, 2);
    Payload p;
    p.w = {{0.5, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.3, 0.1}};
    const auto g = Hypothesis(0, HypothesisKind::q_only, ValueTables::zeros(2, 2, 2), p);
    CHECK(discrepancy_bellman_complete(obs(0, 0, 0, 0.2, 1), g, feats, 2, 2) == doctest::Approx(0.0));
  }

  TEST_CASE("KNR arithmetic") {
    const UnitFeature feats;
    Payload p;
    p.model = {1.0, 0.0};
    const auto g = Hypothesis(0, HypothesisKind::model_backed, ValueTables::zeros(1, 1, 1), p);
    Observation o;
    o.state = State::vector({0.0, 0.0});
    o.next_state = State::vector({0.0, 0.0});
    CHECK(discrepancy_knr(o, g, feats, 0.25, 2) == doctest::Approx(0.5));
  }

  TEST_CASE("witness discrepancy vanishes for constant discriminators") {
    const auto b = make_witness(2, 2, 2, 6, 3);
    const Discriminator constant{std::vector<double>(2 * 2 * 2, 0.7)};
    for (const auto& g : b.cls->members) {
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
          for (int n = 0; n < 2; ++n) CHECK(std::abs(discrepancy_witness(obs(0, s, a, 0.0, n), g, constant, 2, 2, true)) <= 1e-15);
    }
  }

  TEST_CASE("discriminator misuse") {
    const auto b = make_witness(2, 2, 2, 6, 3);
    const auto& f = b.cls->truth();
    try {
      b.spec->discrepancy(f, obs(0, 0, 0, 0.0, 0), f, 1u << 20);
      FAIL("expected DiscriminatorUnknown");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DiscriminatorUnknown);
    }
    const auto q = make_q_rank(3, 2, 2, 4, 1);
    CHECK_THROWS_AS(q.spec->discrepancy(q.cls->truth(), obs(0, 0, 0, 0.0, 0), q.cls->truth(), 0), Error);
  }

  TEST_CASE("mixture discrepancy at horizon one is reward regression") {
    const auto b = make_tabular_mixture(3, 2, 1, 3, 0.25, 5);
    const auto& truth = b.cls->truth();
    for (const auto& f : b.cls->members) {
      for (const auto& g : b.cls->members) {
        const double e = oracle::expected_loss(*b.mdp, *b.spec, f, g, 0);
        if (g.id() == truth.id()) CHECK(std::abs(e) <= 1e-12);
        // l = theta . psi - r for every observation.
        const auto o = obs(0, 0, 1, b.mdp->expected_reward(0, State::tabular(0), 1), 2);
        double predicted = 0.0;
        for (std::size_t k = 0; k < b.spec->mixture->size(); ++k) {
          predicted += g.payload().theta[0][k] * b.spec->mixture->bases[k].reward(0, 0, 1);
        }
        CHECK(b.spec->discrepancy(f, o, g) == doctest::Approx(predicted - o.reward));
      }
    }
  }

  TEST_CASE("estimation rules per family") {
    CHECK(make_q_rank(3, 2, 2, 4, 0).spec->estimation == EstimationRule::on_policy);
    CHECK(make_v_rank(3, 2, 2, 4, 0).spec->estimation == EstimationRule::uniform);
    CHECK(make_tabular_mixture(3, 2, 2, 2, 0.5, 0).spec->estimation == EstimationRule::on_policy);
    CHECK(make_linear_qv_random(3, 1, 2, 2, 0, 6).spec->estimation == EstimationRule::on_policy);
    CHECK(make_bellman_complete(3, 2, 2, 6, 0, 6).spec->estimation == EstimationRule::on_policy);
    CHECK(make_knr(1, 2, 0.1, 2, 2, 0, 1, 0.1).spec->estimation == EstimationRule::on_policy);
    CHECK(make_witness(2, 2, 2, 4, 0).spec->estimation == EstimationRule::uniform);

    const auto b = make_q_rank(4, 4, 2, 4, 0);
    const auto& f = b.cls->members[1];
    const auto on = estimation_policy(*b.spec, f);
    for (int h = 0; h < 2; ++h)
      for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 4; ++a) CHECK(on->prob(h, State::tabular(s), a) == greedy_policy(f).prob(h, State::tabular(s), a));
    BilinearSpec uniform = *b.spec;
    uniform.estimation = EstimationRule::uniform;
    CHECK(estimation_policy(uniform, f)->prob(0, State::tabular(0), 3) == 0.25);
  }

  TEST_CASE("empirical loss basics") {
    const auto g = fixture::q_member(0, 2, 2, 1, {1.0, 0.0, 0.0, 0.5});
    BilinearSpec spec;
    spec.family = Family::q_rank;
    spec.horizon = 2;
    spec.num_actions = 1;
    spec.num_states = 2;
    Dataset d{0, std::vector<Observation>(7, obs(0, 0, 0, 0.3, 1))};
    CHECK(empirical_loss(d, g, g, spec) == doctest::Approx(0.2));
    Dataset empty{0, {}};
    try {
      empirical_loss(empty, g, g, spec);
      FAIL("expected EmptyDataset");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyDataset);
    }
  }

  TEST_CASE("symmetric discriminator classes give non-negative losses") {
    const auto b = make_witness(2, 2, 2, 6, 4);
    Rng rng = make_rng(4, 0, "sym");
    for (const auto& f : b.cls->members) {
      const auto batch = collect_batch(*b.mdp, f, *b.spec, 50, rng);
      for (const auto& g : b.cls->members) {
        for (int h = 0; h < 2; ++h) CHECK(empirical_loss(batch[h], f, g, *b.spec) >= 0.0);
      }
    }
  }

  TEST_CASE("empirical loss equals an independent summation and is permutation invariant") {
    const auto b = make_q_rank(5, 2, 3, 8, 6);
    Rng rng = make_rng(6, 0, "dup");
    std::mt19937 shuffler(3);
    for (const auto& f : b.cls->members) {
      const auto batch = collect_batch(*b.mdp, f, *b.spec, 40, rng);
      for (const auto& g : b.cls->members) {
        for (int h = 0; h < 3; ++h) {
          double sum = 0.0;
          for (const auto& o : batch[h].observations) {
            const double q = g.tables().q_at(h, o.state.id, o.action);
            const double v = h + 1 < 3 ? g.tables().v_at(h + 1, o.next_state.id) : 0.0;
            sum += q - o.reward - v;
          }
          const double expect = sum / static_cast<double>(batch[h].observations.size());
          CHECK(empirical_loss(batch[h], f, g, *b.spec) == expect);
          Dataset shuffled = batch[h];
          std::shuffle(shuffled.observations.begin(), shuffled.observations.end(), shuffler);
          CHECK(std::abs(empirical_loss(shuffled, f, g, *b.spec) - expect) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("batched losses match per-member losses") {
    std::vector<InstanceBundle> bundles;
    bundles.push_back(make_q_rank(4, 2, 3, 6, 1));
    bundles.push_back(make_v_rank(4, 2, 3, 6, 1));
    bundles.push_back(make_tabular_mixture(4, 2, 3, 3, 0.25, 1));
    bundles.push_back(make_bellman_complete(4, 2, 3, 8, 1, 6));
    bundles.push_back(make_glm(3, 2, 2, 5, 1));
    bundles.push_back(make_witness(2, 2, 2, 5, 1));
    bundles.push_back(make_factored(2, 2, {}, 2, 2, 1, 2));
    bundles.push_back(make_knr(1, 2, 0.1, 2, 2, 1, 1, 0.1));
    for (const auto& b : bundles) {
      CAPTURE(b.meta.generator);
      Rng rng = make_rng(2, 0, "batch");
      const auto& f = b.cls->members[0];
      const auto batch = collect_batch(*b.mdp, f, *b.spec, 60, rng);
      for (int h = 0; h < b.mdp->horizon(); ++h) {
        const auto all = batch_losses(batch[h], f, *b.cls, *b.spec);
        for (std::size_t g = 0; g < b.cls->size(); ++g) {
          CHECK(std::abs(all[g] - empirical_loss(batch[h], f, (*b.cls)[g], *b.spec)) <= 1e-10);
        }
      }
    }
  }

  TEST_CASE("factored maximum over discriminators matches brute force") {
    const auto b = make_factored(2, 2, {}, 2, 3, 8, 2);
    const auto& mdp = *b.mdp;
    const int h = 1;
    const std::size_t n_nu = b.spec->num_discriminators(h);
    REQUIRE(n_nu == (std::size_t{1} << 16));
    std::vector<Discriminator> nus;
    nus.reserve(n_nu);
    for (std::size_t nu = 0; nu < n_nu; ++nu) nus.push_back(b.spec->discriminator(h, nu));
    Rng rng = make_rng(8, 0, "factored");
    for (std::size_t fi : {std::size_t{0}, b.cls->size() - 1}) {
      const auto& f = (*b.cls)[fi];
      const auto batch = collect_batch(mdp, f, *b.spec, 100000, rng);
      for (const auto& g : b.cls->members) {
        const auto c = oracle::model_gap_coefficients(mdp, *b.spec, f, g, h);
        double best = -1e300;
        for (const auto& nu : nus) best = std::max(best, oracle::inner(c, nu.values));
        CHECK(std::abs(empirical_loss(batch[h], f, g, *b.spec) - best) <= 0.02);
      }
    }
  }

  TEST_CASE("q-rank expectation matches the exact Bellman error") {
    const auto b = make_q_rank(5, 2, 3, 8, 9);
    Rng rng = make_rng(9, 0, "exact");
    const auto& f = b.cls->members[2];
    const auto batch = collect_batch(*b.mdp, f, *b.spec, 100000, rng);
    for (const auto& g : b.cls->members) {
      for (int h = 0; h < 3; ++h) {
        CHECK(std::abs(empirical_loss(on_step(batch, h), f, g, *b.spec) -
                       oracle::expected_loss(*b.mdp, *b.spec, f, g, h)) <= 0.01);
      }
    }
    // The roll-in member's own loss is its average Bellman error.
    for (int h = 0; h < 3; ++h) {
      CHECK(oracle::expected_loss(*b.mdp, *b.spec, f, f, h) ==
            doctest::Approx(oracle::bellman_error(*b.mdp, f, h)).epsilon(1e-12));
    }
  }

  TEST_CASE("v-rank expectation matches the V-Bellman residual") {
    const auto b = make_v_rank(4, 2, 3, 8, 10);
    Rng rng = make_rng(10, 0, "exact");
    const auto& f = b.cls->members[1];
    const auto batch = collect_batch(*b.mdp, f, *b.spec, 100000, rng);
    for (const auto& g : b.cls->members) {
      for (int h = 0; h < 3; ++h) {
        // Residual of pi_g's action at the roll-in distribution of f.
        const auto d = oracle::rollin_states(*b.mdp, f, h);
        double resid = 0.0;
        for (int s = 0; s < 4; ++s) {
          const State st = State::tabular(s);
          const int a = g.greedy_action(h, st);
          double target = b.mdp->expected_reward(h, st, a);
          for (const auto& t : b.mdp->transition_probs(h, s, a)) target += t.prob * g.v_value(h + 1, State::tabular(t.next));
          resid += d[s] * (g.v_value(h, st) - target);
        }
        CHECK(std::abs(oracle::expected_loss(*b.mdp, *b.spec, f, g, h) - resid) <= 1e-12);
        CHECK(std::abs(empirical_loss(on_step(batch, h), f, g, *b.spec) - resid) <= 0.01 * 2);
      }
    }
  }

  TEST_CASE("KNR expectation matches the feature second moment") {
    const auto b = make_knr(1, 2, 0.1, 2, 2, 11, 1, 0.1);
    const auto& knr = dynamic_cast<const KnrMdp&>(*b.mdp);
    const auto& f = b.cls->truth();
    Rng rng = make_rng(11, 0, "knr");
    const std::size_t m = 100000;
    const auto batch = collect_batch(knr, f, *b.spec, static_cast<int>(m), rng);
    const std::size_t dphi = knr.features().phi_dim();
    for (int h = 0; h < 2; ++h) {
      // Second moment of phi(s_h, a_h) from the same samples.
      std::vector<double> second(dphi * dphi, 0.0);
      for (const auto& o : batch[h].observations) {
        const auto phi = knr.features().phi(h, o.state, o.action);
        for (std::size_t i = 0; i < dphi; ++i)
          for (std::size_t j = 0; j < dphi; ++j) second[i * dphi + j] += phi[i] * phi[j] / m;
      }
      for (std::size_t gi = 0; gi < b.cls->size(); gi += 3) {
        const auto& g = (*b.cls)[gi];
        const auto du = oracle::minus(g.payload().model, knr.op());
        double closed = 0.0;
        for (std::size_t i = 0; i < dphi; ++i)
          for (std::size_t j = 0; j < dphi; ++j) closed += du[i] * second[i * dphi + j] * du[j];
        CHECK(std::abs(empirical_loss(batch[h], f, g, *b.spec) - closed) <= 0.02);
      }
    }
  }

  TEST_CASE("zero at truth for every family") {
    std::vector<InstanceBundle> bundles;
    bundles.push_back(make_q_rank(4, 2, 3, 6, 12));
    bundles.push_back(make_v_rank(4, 2, 3, 6, 12));
    bundles.push_back(make_low_occupancy(5, 2, 3, 2, 6, 12));
    bundles.push_back(make_tabular_mixture(4, 2, 3, 3, 0.25, 12));
    bundles.push_back(make_linear_qv_random(3, 1, 2, 3, 12, 6));
    bundles.push_back(make_bellman_complete(4, 2, 3, 8, 12, 6));
    bundles.push_back(make_glm(3, 2, 3, 5, 12));
    bundles.push_back(make_witness(2, 2, 2, 5, 12));
    bundles.push_back(make_factored(2, 2, {}, 2, 2, 12, 2));
    for (const auto& b : bundles) {
      CAPTURE(b.meta.generator);
      const auto& truth = b.cls->truth();
      for (const auto& f : b.cls->members) {
        for (int h = 0; h < b.mdp->horizon(); ++h) {
          if (!b.spec->generalized()) {
            CHECK(std::abs(oracle::expected_loss(*b.mdp, *b.spec, f, truth, h)) <= 1e-12);
          } else if (b.spec->family != Family::factored) {
            for (std::size_t nu = 0; nu < b.spec->num_discriminators(h); ++nu) {
              CHECK(std::abs(oracle::expected_loss(*b.mdp, *b.spec, f, truth, h, nu)) <= 1e-12);
            }
          } else {
            const auto c = oracle::model_gap_coefficients(*b.mdp, *b.spec, f, truth, h);
            for (double v : c) CHECK(std::abs(v) <= 1e-12);
          }
        }
      }
      // Sampled version of the same property.
      Rng rng = make_rng(12, 0, "zero");
      const std::size_t m = 2000;
      const auto& f = b.cls->members.back();
      const auto batch = collect_batch(*b.mdp, f, *b.spec, static_cast<int>(m), rng);
      for (int h = 0; h < b.mdp->horizon(); ++h) {
        CHECK(std::abs(empirical_loss(batch[h], f, truth, *b.spec)) <= mc_band(b.spec->loss_bound, m));
      }
    }
  }

  TEST_CASE("transforms") {
    CHECK(Transform::identity()(0.3) == 0.3);
    CHECK(Transform::linear(2.0)(0.3) == doctest::Approx(0.6));
    CHECK(Transform::square_root(3.0)(0.25) == doctest::Approx(1.5));
    for (const auto& t : {Transform::identity(), Transform::linear(0.5), Transform::square_root(2.0)}) {
      CHECK(t(0.0) == 0.0);
      double prev = 0.0;
      for (int i = 1; i <= 100; ++i) {
        const double v = t(i * 0.05);
        CHECK(v >= prev);
        prev = v;
      }
    }
  }

  TEST_CASE("family names round trip") {
    for (auto f : {Family::q_rank, Family::v_rank, Family::mixture, Family::linear_qv, Family::bellman_complete,
                   Family::low_occupancy, Family::knr, Family::glm_complete, Family::witness, Family::factored}) {
      CHECK(parse_family(to_string(f)) == f);
    }
    CHECK_THROWS_AS(parse_family("lqr"), Error);
  }
}
