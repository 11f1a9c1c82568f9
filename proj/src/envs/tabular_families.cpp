#include <memory>

#include "bilin/error.hpp"
#include "common.hpp"

namespace bilin {

using namespace envs_detail;

namespace {

// Linear-MDP kernel of rank d: P_h(.|s,a) = sum_i phi_i(s,a) mu_{h,i}.
TabularMdp low_rank_mdp(int S, int A, int H, int d, Rng& rng) {
  TabularMdp mdp(S, A, H);
  std::vector<std::vector<double>> phi(static_cast<std::size_t>(S) * A);
  for (auto& p : phi) p = dirichlet(rng, d);
  for (int h = 0; h < H; ++h) {
    std::vector<std::vector<double>> mu(d);
    for (auto& m : mu) m = dirichlet(rng, S);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const auto& f = phi[static_cast<std::size_t>(s) * A + a];
        std::vector<Transition> row;
        double total = 0.0;
        for (int n = 0; n < S; ++n) {
          double p = 0.0;
          for (int i = 0; i < d; ++i) p += f[i] * mu[i][n];
          if (p > 0.0) row.push_back({n, p});
          total += p;
        }
        for (auto& t : row) t.prob /= total;
        mdp.set_transitions(h, s, a, std::move(row));
        mdp.set_reward(h, s, a, uniform01(rng));
      }
    }
  }
  return mdp;
}

InstanceBundle q_residual_bundle(std::shared_ptr<const TabularMdp> mdp, HypothesisClass cls, Family family,
                                 EstimationRule rule) {
  InstanceBundle b;
  const int S = mdp->num_states();
  const int A = mdp->num_actions();
  const int H = mdp->horizon();
  auto spec = std::make_shared<BilinearSpec>();
  spec->family = family;
  spec->estimation = rule;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = S;
  spec->loss_bound = H + 1.0;
  b.mdp = mdp;
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  b.spec = spec;
  BilinearWitness wit;
  wit.w = [mdp, S, A](int h, const Hypothesis& g) {
    std::vector<double> out(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) out[static_cast<std::size_t>(s) * A + a] = bellman_residual(*mdp, g, h, s, a);
    }
    return out;
  };
  wit.x = [mdp, rule](int h, const Hypothesis& f) { return rollin_distribution(*mdp, f, h, rule); };
  b.witness = std::move(wit);
  b.meta.occupancy_rank = occupancy_rank(*mdp, *b.cls, rule);
  b.meta.v_star = exact_v_star(*mdp);
  fill_witness_bounds(b);
  return b;
}

}  // namespace

InstanceBundle make_q_rank(int S, int A, int H, int class_size, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0, "env-q-rank");
  auto mdp = std::make_shared<const TabularMdp>(random_tabular_mdp(S, A, H, rng));
  auto cls = q_perturbation_class(*mdp, class_size, rng);
  auto b = q_residual_bundle(mdp, std::move(cls), Family::q_rank, EstimationRule::on_policy);
  b.meta.generator = "q_rank";
  b.meta.params = {{"S", S}, {"A", A}, {"H", H}, {"class_size", class_size}};
  b.meta.seed = seed;
  return b;
}

InstanceBundle make_v_rank(int S, int A, int H, int class_size, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0, "env-v-rank");
  auto mdp = std::make_shared<const TabularMdp>(random_tabular_mdp(S, A, H, rng));
  auto cls = q_perturbation_class(*mdp, class_size, rng);
  InstanceBundle b;
  b.mdp = mdp;
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::v_rank;
  spec->estimation = EstimationRule::uniform;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = S;
  spec->loss_bound = static_cast<double>(A) * (H + 1.0);
  b.spec = spec;
  BilinearWitness wit;
  wit.w = [mdp, S](int h, const Hypothesis& g) {
    std::vector<double> out(S);
    for (int s = 0; s < S; ++s) out[s] = bellman_residual(*mdp, g, h, s, g.greedy_row(h, s));
    return out;
  };
  wit.x = [mdp](int h, const Hypothesis& f) { return state_distribution(*mdp, f, h); };
  b.witness = std::move(wit);
  b.meta.generator = "v_rank";
  b.meta.params = {{"S", S}, {"A", A}, {"H", H}, {"class_size", class_size}};
  b.meta.seed = seed;
  b.meta.v_star = exact_v_star(*mdp);
  fill_witness_bounds(b);
  return b;
}

InstanceBundle make_low_occupancy(int S, int A, int H, int d, int class_size, std::uint64_t seed,
                                  bool uniform_estimation) {
  if (d < 1) throw Error(ErrorCode::ConfigError, "low_occupancy needs d >= 1");
  Rng rng = make_rng(seed, 0, "env-low-occupancy");
  auto mdp = std::make_shared<const TabularMdp>(low_rank_mdp(S, A, H, d, rng));
  auto cls = q_perturbation_class(*mdp, class_size, rng);
  const auto rule = uniform_estimation ? EstimationRule::uniform : EstimationRule::on_policy;
  auto b = q_residual_bundle(mdp, std::move(cls), Family::low_occupancy, rule);
  b.meta.generator = "low_occupancy";
  b.meta.params = {{"S", S},
                   {"A", A},
                   {"H", H},
                   {"d", d},
                   {"class_size", class_size},
                   {"uniform", uniform_estimation ? 1.0 : 0.0}};
  b.meta.seed = seed;
  return b;
}

}  // namespace bilin
