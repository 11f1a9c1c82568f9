#include "bilin/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "bilin/error.hpp"

namespace bilin {

int EpisodicMdp::num_states() const {
  throw Error(ErrorCode::NotTabular, "state space is not finite");
}

std::span<const Transition> EpisodicMdp::transition_probs(int, int, int) const {
  throw Error(ErrorCode::NotTabular, "closed-form transition kernel unavailable");
}

ValueTables ValueTables::zeros(int horizon, int rows, int actions) {
  ValueTables t;
  t.horizon = horizon;
  t.rows = rows;
  t.actions = actions;
  t.q.assign(static_cast<std::size_t>(horizon) * rows * actions, 0.0);
  t.v.assign(static_cast<std::size_t>(horizon + 1) * rows, 0.0);
  return t;
}

TabularKernel::TabularKernel(int num_states, int num_actions, int horizon)
    : num_states(num_states),
      num_actions(num_actions),
      horizon(horizon),
      p(static_cast<std::size_t>(horizon) * num_states * num_actions * num_states, 0.0),
      r(static_cast<std::size_t>(horizon) * num_states * num_actions, 0.0) {}

TabularMdp::TabularMdp(int num_states, int num_actions, int horizon, int initial_state)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      initial_state_(initial_state),
      rows_(static_cast<std::size_t>(horizon) * num_states * num_actions),
      cdf_(rows_.size()),
      rewards_(rows_.size(), 0.0) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) {
    throw Error(ErrorCode::DimensionMismatch, "tabular MDP needs S, A, H >= 1");
  }
  if (initial_state < 0 || initial_state >= num_states) {
    throw Error(ErrorCode::DimensionMismatch, "initial state out of range");
  }
  // Default: self-loop, so every row is a valid distribution.
  for (int h = 0; h < horizon; ++h) {
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) set_transitions(h, s, a, {{s, 1.0}});
    }
  }
}

TabularMdp TabularMdp::from_kernel(const TabularKernel& kernel, int initial_state) {
  TabularMdp mdp(kernel.num_states, kernel.num_actions, kernel.horizon, initial_state);
  for (int h = 0; h < kernel.horizon; ++h) {
    for (int s = 0; s < kernel.num_states; ++s) {
      for (int a = 0; a < kernel.num_actions; ++a) {
        std::vector<Transition> row;
        for (int n = 0; n < kernel.num_states; ++n) {
          const double p = kernel.prob(h, s, a, n);
          if (p > 0.0) row.push_back({n, p});
        }
        mdp.set_transitions(h, s, a, std::move(row));
        mdp.set_reward(h, s, a, kernel.reward(h, s, a));
      }
    }
  }
  return mdp;
}

void TabularMdp::set_transitions(int h, int s, int a, std::vector<Transition> row) {
  double total = 0.0;
  for (const auto& t : row) {
    if (t.next < 0 || t.next >= num_states_ || t.prob < 0.0) {
      throw Error(ErrorCode::DimensionMismatch, "invalid transition entry");
    }
    total += t.prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::DimensionMismatch, "transition row does not sum to 1");
  std::vector<double> cdf(row.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    acc += row[i].prob;
    cdf[i] = acc;
  }
  const std::size_t idx = index(h, s, a);
  rows_[idx] = std::move(row);
  cdf_[idx] = std::move(cdf);
}

void TabularMdp::set_reward(int h, int s, int a, double mean) {
  if (mean < 0.0 || mean > 1.0) throw Error(ErrorCode::DimensionMismatch, "reward mean outside [0,1]");
  rewards_[index(h, s, a)] = mean;
}

TabularKernel TabularMdp::to_kernel() const {
  TabularKernel k(num_states_, num_actions_, horizon_);
  for (int h = 0; h < horizon_; ++h) {
    for (int s = 0; s < num_states_; ++s) {
      for (int a = 0; a < num_actions_; ++a) {
        for (const auto& t : rows_[index(h, s, a)]) k.prob(h, s, a, t.next) += t.prob;
        k.reward(h, s, a) = rewards_[index(h, s, a)];
      }
    }
  }
  return k;
}

double TabularMdp::reward(int h, const State& s, int a, Rng& rng) const {
  const double mean = rewards_[index(h, s.id, a)];
  if (!bernoulli_rewards_) return mean;
  return uniform01(rng) < mean ? 1.0 : 0.0;
}

State TabularMdp::transition(int h, const State& s, int a, Rng& rng) const {
  const std::size_t idx = index(h, s.id, a);
  const auto& cdf = cdf_[idx];
  const double u = uniform01(rng) * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
  return State::tabular(rows_[idx][k].next);
}

double TabularMdp::expected_reward(int h, const State& s, int a) const { return rewards_[index(h, s.id, a)]; }

std::span<const Transition> TabularMdp::transition_probs(int h, int s, int a) const { return rows_[index(h, s, a)]; }

TablePolicy::TablePolicy(int horizon, int num_states, std::vector<int> actions)
    : horizon_(horizon), num_states_(num_states), actions_(std::move(actions)) {
  if (actions_.size() != static_cast<std::size_t>(horizon) * num_states) {
    throw Error(ErrorCode::DimensionMismatch, "policy table has wrong size");
  }
}

TablePolicy TablePolicy::constant(int horizon, int num_states, int action) {
  return TablePolicy(horizon, num_states, std::vector<int>(static_cast<std::size_t>(horizon) * num_states, action));
}

Trajectory sample_episode(const EpisodicMdp& mdp, const Policy& policy, Rng& rng) {
  Trajectory traj;
  const int H = mdp.horizon();
  traj.steps.reserve(H);
  State s = mdp.initial_state();
  for (int h = 0; h < H; ++h) {
    const int a = policy.act(h, s, rng);
    const double r = mdp.reward(h, s, a, rng);
    State next = mdp.transition(h, s, a, rng);
    traj.total_return += r;
    traj.steps.push_back(Observation{h, r, s, a, next});
    s = std::move(next);
  }
  return traj;
}

Observation rollin_then_estimate(const EpisodicMdp& mdp, const Policy& rollin, const Policy& estimation, int h,
                                 Rng& rng) {
  State s = mdp.initial_state();
  for (int k = 0; k < h; ++k) {
    const int a = rollin.act(k, s, rng);
    mdp.reward(k, s, a, rng);
    s = mdp.transition(k, s, a, rng);
  }
  const int a = estimation.act(h, s, rng);
  const double r = mdp.reward(h, s, a, rng);
  State next = mdp.transition(h, s, a, rng);
  return Observation{h, r, std::move(s), a, std::move(next)};
}

double hoeffding_half_width(int horizon, std::size_t n, double delta) {
  return horizon * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

namespace {

double rollout_return(const EpisodicMdp& mdp, const Policy& policy, Rng& rng) {
  State s = mdp.initial_state();
  double total = 0.0;
  for (int h = 0; h < mdp.horizon(); ++h) {
    const int a = policy.act(h, s, rng);
    total += mdp.reward(h, s, a, rng);
    s = mdp.transition(h, s, a, rng);
  }
  return total;
}

}  // namespace

McEstimate monte_carlo_value(const EpisodicMdp& mdp, const Policy& policy, std::size_t n_rollouts, Rng& rng,
                             double delta) {
  if (n_rollouts == 0) throw Error(ErrorCode::DimensionMismatch, "n_rollouts must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < n_rollouts; ++i) sum += rollout_return(mdp, policy, rng);
  return {sum / static_cast<double>(n_rollouts), hoeffding_half_width(mdp.horizon(), n_rollouts, delta), n_rollouts};
}

McEstimate monte_carlo_value_parallel(const EpisodicMdp& mdp, const Policy& policy, std::size_t n_rollouts,
                                      std::uint64_t seed, unsigned workers, double delta) {
  if (n_rollouts == 0) throw Error(ErrorCode::DimensionMismatch, "n_rollouts must be positive");
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_rollouts)));
  std::vector<double> sums(workers, 0.0);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = n_rollouts * w / workers;
    const std::size_t end = n_rollouts * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      Rng rng = make_rng(seed, w, "mc-worker");
      double s = 0.0;
      for (std::size_t i = begin; i < end; ++i) s += rollout_return(mdp, policy, rng);
      sums[w] = s;
    });
  }
  for (auto& t : pool) t.join();
  double sum = 0.0;
  for (double s : sums) sum += s;
  return {sum / static_cast<double>(n_rollouts), hoeffding_half_width(mdp.horizon(), n_rollouts, delta), n_rollouts};
}

namespace {

void require_tabular(const EpisodicMdp& mdp) {
  if (!mdp.is_tabular()) throw Error(ErrorCode::NotTabular, "operation needs a tabular MDP");
}

}  // namespace

OptimalSolution value_iteration(const EpisodicMdp& mdp) {
  require_tabular(mdp);
  const int H = mdp.horizon();
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  ValueTables t = ValueTables::zeros(H, S, A);
  std::vector<int> actions(static_cast<std::size_t>(H) * S, 0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      const State st = State::tabular(s);
      int best_a = 0;
      double best = 0.0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.expected_reward(h, st, a);
        for (const auto& tr : mdp.transition_probs(h, s, a)) q += tr.prob * t.v_at(h + 1, tr.next);
        t.q_at(h, s, a) = q;
        if (a == 0 || q > best) {
          best = q;
          best_a = a;
        }
      }
      t.v_at(h, s) = best;
      actions[static_cast<std::size_t>(h) * S + s] = best_a;
    }
  }
  return OptimalSolution{std::move(t), TablePolicy(H, S, std::move(actions))};
}

ValueTables evaluate_policy_exact(const EpisodicMdp& mdp, const Policy& policy) {
  require_tabular(mdp);
  const int H = mdp.horizon();
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  ValueTables t = ValueTables::zeros(H, S, A);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      const State st = State::tabular(s);
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.expected_reward(h, st, a);
        for (const auto& tr : mdp.transition_probs(h, s, a)) q += tr.prob * t.v_at(h + 1, tr.next);
        t.q_at(h, s, a) = q;
        const double p = policy.prob(h, st, a);
        if (p > 0.0) v += p * q;
      }
      t.v_at(h, s) = v;
    }
  }
  return t;
}

std::vector<std::vector<double>> state_occupancy(const EpisodicMdp& mdp, const Policy& policy) {
  require_tabular(mdp);
  const int H = mdp.horizon();
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  std::vector<std::vector<double>> d(H, std::vector<double>(S, 0.0));
  d[0][mdp.initial_state().id] = 1.0;
  for (int h = 0; h + 1 < H; ++h) {
    for (int s = 0; s < S; ++s) {
      if (d[h][s] == 0.0) continue;
      const State st = State::tabular(s);
      for (int a = 0; a < A; ++a) {
        const double p = policy.prob(h, st, a);
        if (p == 0.0) continue;
        for (const auto& tr : mdp.transition_probs(h, s, a)) d[h + 1][tr.next] += d[h][s] * p * tr.prob;
      }
    }
  }
  return d;
}

std::vector<std::vector<char>> reachable_states(const EpisodicMdp& mdp) {
  require_tabular(mdp);
  const int H = mdp.horizon();
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  std::vector<std::vector<char>> reach(H, std::vector<char>(S, 0));
  reach[0][mdp.initial_state().id] = 1;
  for (int h = 0; h + 1 < H; ++h) {
    for (int s = 0; s < S; ++s) {
      if (!reach[h][s]) continue;
      for (int a = 0; a < A; ++a) {
        for (const auto& tr : mdp.transition_probs(h, s, a)) {
          if (tr.prob > 0.0) reach[h + 1][tr.next] = 1;
        }
      }
    }
  }
  return reach;
}

}  // namespace bilin
