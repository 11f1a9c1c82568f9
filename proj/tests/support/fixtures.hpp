#pragma once

#include <memory>
#include <vector>

#include "bilin/hypothesis.hpp"
#include "bilin/mdp.hpp"

namespace fixture {

using bilin::TabularMdp;
using bilin::Transition;

// Single state, single action, constant reward.
inline TabularMdp constant_chain(int H, double r) {
  TabularMdp m(1, 1, H);
  for (int h = 0; h < H; ++h) {
    m.set_transitions(h, 0, 0, {{0, 1.0}});
    m.set_reward(h, 0, 0, r);
  }
  return m;
}

// Two states, two actions, stochastic kernel that is the same at every step.
inline TabularMdp two_state(int H) {
  TabularMdp m(2, 2, H);
  for (int h = 0; h < H; ++h) {
    m.set_transitions(h, 0, 0, {{0, 0.7}, {1, 0.3}});
    m.set_transitions(h, 0, 1, {{0, 0.2}, {1, 0.8}});
    m.set_transitions(h, 1, 0, {{0, 0.5}, {1, 0.5}});
    m.set_transitions(h, 1, 1, {{1, 1.0}});
    m.set_reward(h, 0, 0, 0.1);
    m.set_reward(h, 0, 1, 0.4);
    m.set_reward(h, 1, 0, 0.9);
    m.set_reward(h, 1, 1, 0.3);
  }
  return m;
}

// Deterministic: state 0 moves to state 1 on action 1 and stays otherwise; state 1 is absorbing.
// Reward 1 for action 1 in state 1.
inline TabularMdp deterministic_two_state(int H) {
  TabularMdp m(2, 2, H);
  for (int h = 0; h < H; ++h) {
    m.set_transitions(h, 0, 0, {{0, 1.0}});
    m.set_transitions(h, 0, 1, {{1, 1.0}});
    m.set_transitions(h, 1, 0, {{1, 1.0}});
    m.set_transitions(h, 1, 1, {{1, 1.0}});
    m.set_reward(h, 1, 1, 1.0);
  }
  return m;
}

// Q-only hypothesis from per-step Q tables laid out [h][s][a].
inline bilin::Hypothesis q_member(int id, int H, int S, int A, const std::vector<double>& q) {
  auto t = bilin::ValueTables::zeros(H, S, A);
  t.q = q;
  return bilin::Hypothesis(id, bilin::HypothesisKind::q_only, std::move(t));
}

inline bilin::Hypothesis optimal_member(int id, const bilin::EpisodicMdp& mdp) {
  const auto sol = bilin::value_iteration(mdp);
  return bilin::Hypothesis(id, bilin::HypothesisKind::value_pair, sol.values);
}

}  // namespace fixture
