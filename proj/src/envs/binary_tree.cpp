#include <memory>

#include "bilin/error.hpp"
#include "common.hpp"

namespace bilin {

using namespace envs_detail;

// Complete binary tree: level-l states are 2^l - 1 .. 2^{l+1} - 2, action a leads to child 2s + 1 + a.
// The only reward is 1 for the special action at the special leaf on the last step.
InstanceBundle make_binary_tree(int H, int special_leaf, int special_action, std::uint64_t seed) {
  if (H < 1 || H > 10) throw Error(ErrorCode::ConfigError, "binary_tree supports 1 <= H <= 10");
  const int leaves = 1 << (H - 1);
  if (special_leaf < 0 || special_leaf >= leaves || special_action < 0 || special_action > 1) {
    throw Error(ErrorCode::ConfigError, "special leaf or action out of range");
  }
  const int S = (1 << H) - 1;
  const int A = 2;
  const int first_leaf = leaves - 1;
  auto mdp = std::make_shared<TabularMdp>(S, A, H);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const int child = 2 * s + 1 + a;
        mdp->set_transitions(h, s, a, {{child < S ? child : s, 1.0}});
        const bool hit = h == H - 1 && s == first_leaf + special_leaf && a == special_action;
        mdp->set_reward(h, s, a, hit ? 1.0 : 0.0);
      }
    }
  }

  // Member (leaf, action): Q_h is one on the (state, action) pair its path takes at level h.
  const int d = S * A;
  HypothesisClass cls;
  for (int leaf = 0; leaf < leaves; ++leaf) {
    for (int last = 0; last < A; ++last) {
      std::vector<int> path(H);
      std::vector<int> moves(H);
      int node = first_leaf + leaf;
      moves[H - 1] = last;
      for (int h = H - 1; h >= 0; --h) {
        path[h] = node;
        if (h > 0) {
          moves[h - 1] = (node - 1) % 2;
          node = (node - 1) / 2;
        }
      }
      Payload p;
      ValueTables t = ValueTables::zeros(H, S, A);
      for (int h = 0; h < H; ++h) {
        std::vector<double> w(d, 0.0);
        w[static_cast<std::size_t>(path[h]) * A + moves[h]] = 1.0;
        t.q_at(h, path[h], moves[h]) = 1.0;
        p.w.push_back(std::move(w));
      }
      const int id = static_cast<int>(cls.members.size());
      cls.members.emplace_back(id, HypothesisKind::q_only, std::move(t), std::move(p));
      if (leaf == special_leaf && last == special_action) cls.truth_index = id;
    }
  }

  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::bellman_complete;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = S;
  spec->loss_bound = 2.0;
  spec->features = std::make_shared<OneHotFeatures>(OneHotFeatures::identity(S, A));

  auto backup = [mdp, S, A, H](int h, const std::vector<double>& next) {
    std::vector<double> out(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double v = mdp->expected_reward(h, State::tabular(s), a);
        if (h + 1 < H && !next.empty()) {
          const int child = mdp->transition_probs(h, s, a)[0].next;
          v += std::max(next[static_cast<std::size_t>(child) * A], next[static_cast<std::size_t>(child) * A + 1]);
        }
        out[static_cast<std::size_t>(s) * A + a] = v;
      }
    }
    return out;
  };

  InstanceBundle b;
  b.mdp = mdp;
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  b.spec = spec;
  b.backup = backup;
  BilinearWitness wit;
  wit.w = [backup, H](int h, const Hypothesis& g) {
    const auto& w = g.payload().w;
    auto out = w[h];
    const auto target = backup(h, h + 1 < H ? w[h + 1] : std::vector<double>{});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= target[i];
    return out;
  };
  wit.x = [mdp](int h, const Hypothesis& f) { return rollin_distribution(*mdp, f, h, EstimationRule::on_policy); };
  b.witness = std::move(wit);
  b.meta.generator = "binary_tree";
  b.meta.params = {{"H", H}, {"leaf", special_leaf}, {"action", special_action}};
  b.meta.seed = seed;
  b.meta.v_star = 1.0;
  fill_witness_bounds(b);
  return b;
}

}  // namespace bilin
