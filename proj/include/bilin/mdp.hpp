#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bilin/rng.hpp"

namespace bilin {

// Tabular states carry an id; vector-valued states carry coordinates and id = -1.
struct State {
  int id = -1;
  std::vector<double> x;

  static State tabular(int id) { return State{id, {}}; }
  static State vector(std::vector<double> x) { return State{-1, std::move(x)}; }

  bool operator==(const State&) const = default;
};

struct Observation {
  int step = 0;
  double reward = 0.0;
  State state;
  int action = 0;
  State next_state;

  bool operator==(const Observation&) const = default;
};

struct Trajectory {
  std::vector<Observation> steps;
  double total_return = 0.0;
};

struct Transition {
  int next;
  double prob;
};

class EpisodicMdp {
 public:
  virtual ~EpisodicMdp() = default;

  virtual int horizon() const = 0;
  virtual int num_actions() const = 0;
  virtual State initial_state() const = 0;
  virtual bool is_tabular() const = 0;
  // Throws NotTabular for vector-state instances.
  virtual int num_states() const;
  virtual int state_dim() const { return 0; }

  virtual double reward(int h, const State& s, int a, Rng& rng) const = 0;
  virtual State transition(int h, const State& s, int a, Rng& rng) const = 0;
  virtual double expected_reward(int h, const State& s, int a) const = 0;
  // Throws NotTabular for vector-state instances.
  virtual std::span<const Transition> transition_probs(int h, int s, int a) const;
};

// Per-step value tables over rows (tabular states or discretization cells).
// v has H+1 layers with the last one identically zero.
struct ValueTables {
  int horizon = 0;
  int rows = 0;
  int actions = 0;
  std::vector<double> q;
  std::vector<double> v;

  static ValueTables zeros(int horizon, int rows, int actions);

  double& q_at(int h, int s, int a) { return q[(static_cast<std::size_t>(h) * rows + s) * actions + a]; }
  double q_at(int h, int s, int a) const { return q[(static_cast<std::size_t>(h) * rows + s) * actions + a]; }
  double& v_at(int h, int s) { return v[static_cast<std::size_t>(h) * rows + s]; }
  double v_at(int h, int s) const { return v[static_cast<std::size_t>(h) * rows + s]; }
};

// Dense per-step kernel p[h][s][a][s'] and mean rewards r[h][s][a].
struct TabularKernel {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<double> p;
  std::vector<double> r;

  TabularKernel() = default;
  TabularKernel(int num_states, int num_actions, int horizon);

  std::size_t sa_index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states + s) * num_actions + a;
  }
  double& prob(int h, int s, int a, int next) { return p[sa_index(h, s, a) * num_states + next]; }
  double prob(int h, int s, int a, int next) const { return p[sa_index(h, s, a) * num_states + next]; }
  std::span<const double> row(int h, int s, int a) const {
    return {p.data() + sa_index(h, s, a) * num_states, static_cast<std::size_t>(num_states)};
  }
  double& reward(int h, int s, int a) { return r[sa_index(h, s, a)]; }
  double reward(int h, int s, int a) const { return r[sa_index(h, s, a)]; }
};

class TabularMdp final : public EpisodicMdp {
 public:
  TabularMdp(int num_states, int num_actions, int horizon, int initial_state = 0);

  // Zero-probability entries are dropped.
  static TabularMdp from_kernel(const TabularKernel& kernel, int initial_state = 0);

  // Row must be a probability distribution (validated to 1e-9).
  void set_transitions(int h, int s, int a, std::vector<Transition> row);
  void set_reward(int h, int s, int a, double mean);
  // When enabled, sampled rewards are Bernoulli with the configured mean.
  void set_bernoulli_rewards(bool enabled) { bernoulli_rewards_ = enabled; }

  TabularKernel to_kernel() const;

  int horizon() const override { return horizon_; }
  int num_actions() const override { return num_actions_; }
  State initial_state() const override { return State::tabular(initial_state_); }
  bool is_tabular() const override { return true; }
  int num_states() const override { return num_states_; }

  double reward(int h, const State& s, int a, Rng& rng) const override;
  State transition(int h, const State& s, int a, Rng& rng) const override;
  double expected_reward(int h, const State& s, int a) const override;
  std::span<const Transition> transition_probs(int h, int s, int a) const override;

 private:
  std::size_t index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ + a;
  }

  int num_states_;
  int num_actions_;
  int horizon_;
  int initial_state_;
  bool bernoulli_rewards_ = false;
  std::vector<std::vector<Transition>> rows_;
  std::vector<std::vector<double>> cdf_;
  std::vector<double> rewards_;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual int act(int h, const State& s, Rng& rng) const = 0;
  virtual double prob(int h, const State& s, int a) const = 0;
};

class UniformPolicy final : public Policy {
 public:
  explicit UniformPolicy(int num_actions) : num_actions_(num_actions) {}
  int act(int, const State&, Rng& rng) const override { return uniform_int(rng, num_actions_); }
  double prob(int, const State&, int) const override { return 1.0 / num_actions_; }

 private:
  int num_actions_;
};

// Deterministic tabular policy given as an action table [h][s].
class TablePolicy final : public Policy {
 public:
  TablePolicy(int horizon, int num_states, std::vector<int> actions);
  static TablePolicy constant(int horizon, int num_states, int action);

  int action(int h, int s) const { return actions_[static_cast<std::size_t>(h) * num_states_ + s]; }
  int act(int h, const State& s, Rng&) const override { return action(h, s.id); }
  double prob(int h, const State& s, int a) const override { return action(h, s.id) == a ? 1.0 : 0.0; }

 private:
  int horizon_;
  int num_states_;
  std::vector<int> actions_;
};

Trajectory sample_episode(const EpisodicMdp& mdp, const Policy& policy, Rng& rng);

// Rolls in with one policy for steps 0..h-1, then acts with the estimation policy at h.
Observation rollin_then_estimate(const EpisodicMdp& mdp, const Policy& rollin, const Policy& estimation, int h,
                                 Rng& rng);

inline constexpr double kEvalDelta = 0.01;

struct McEstimate {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;
};

double hoeffding_half_width(int horizon, std::size_t n, double delta = kEvalDelta);

McEstimate monte_carlo_value(const EpisodicMdp& mdp, const Policy& policy, std::size_t n_rollouts, Rng& rng,
                             double delta = kEvalDelta);

// Splits rollouts over workers with sub-seeds derived from (seed, worker);
// reproducible for a fixed (seed, workers) pair.
McEstimate monte_carlo_value_parallel(const EpisodicMdp& mdp, const Policy& policy, std::size_t n_rollouts,
                                      std::uint64_t seed, unsigned workers, double delta = kEvalDelta);

struct OptimalSolution {
  ValueTables values;
  TablePolicy policy;
};

OptimalSolution value_iteration(const EpisodicMdp& mdp);

// Q and V of an arbitrary (possibly stochastic) policy on a tabular instance.
ValueTables evaluate_policy_exact(const EpisodicMdp& mdp, const Policy& policy);

// State-visitation distribution d_h(s) for h = 0..H-1.
std::vector<std::vector<double>> state_occupancy(const EpisodicMdp& mdp, const Policy& policy);

// reachable[h][s] is true when some action sequence reaches s at step h.
std::vector<std::vector<char>> reachable_states(const EpisodicMdp& mdp);

}  // namespace bilin
