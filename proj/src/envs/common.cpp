#include "common.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include "bilin/error.hpp"
#include "bilin/linalg.hpp"

namespace bilin {

std::string InstanceMetadata::descriptor() const {
  std::string out = generator;
  char buf[64];
  for (const auto& [key, value] : params) {
    std::snprintf(buf, sizeof buf, " %s=%.17g", key.c_str(), value);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, " seed=%" PRIu64, seed);
  out += buf;
  return out;
}

TabularMdp random_tabular_mdp(int S, int A, int H, Rng& rng, int support, double reward_lo, double reward_hi,
                              bool time_homogeneous) {
  if (S <= 0 || A <= 0 || H <= 0) throw Error(ErrorCode::ConfigError, "S, A and H must be positive");
  if (support <= 0 || support > S) support = S;
  TabularMdp mdp(S, A, H);
  std::vector<int> order(S);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        if (time_homogeneous && h > 0) {
          auto row = mdp.transition_probs(0, s, a);
          mdp.set_transitions(h, s, a, {row.begin(), row.end()});
          mdp.set_reward(h, s, a, mdp.expected_reward(0, State::tabular(s), a));
          continue;
        }
        for (int i = 0; i < S; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::sort(order.begin(), order.begin() + support);
        const auto probs = envs_detail::dirichlet(rng, support);
        std::vector<Transition> row;
        for (int i = 0; i < support; ++i) row.push_back({order[i], probs[i]});
        mdp.set_transitions(h, s, a, std::move(row));
        mdp.set_reward(h, s, a, reward_lo + (reward_hi - reward_lo) * uniform01(rng));
      }
    }
  }
  return mdp;
}

namespace envs_detail {

std::vector<double> dirichlet(Rng& rng, int n) {
  std::vector<double> out(n);
  double total = 0.0;
  for (auto& v : out) {
    v = -std::log(1.0 - uniform01(rng));
    total += v;
  }
  for (auto& v : out) v /= total;
  // Absorb rounding so the row sums to one.
  double rest = 1.0;
  for (int i = 0; i + 1 < n; ++i) rest -= out[i];
  out[n - 1] = std::max(0.0, rest);
  return out;
}

std::vector<double> state_distribution(const EpisodicMdp& mdp, const Hypothesis& f, int h) {
  const GreedyPolicy pi(f);
  return state_occupancy(mdp, pi).at(static_cast<std::size_t>(h));
}

std::vector<double> rollin_distribution(const EpisodicMdp& mdp, const Hypothesis& f, int h, EstimationRule rule) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const auto d = state_distribution(mdp, f, h);
  std::vector<double> out(static_cast<std::size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s) {
    if (rule == EstimationRule::uniform) {
      for (int a = 0; a < A; ++a) out[static_cast<std::size_t>(s) * A + a] = d[s] / A;
    } else {
      out[static_cast<std::size_t>(s) * A + f.greedy_row(h, s)] = d[s];
    }
  }
  return out;
}

double bellman_residual(const EpisodicMdp& mdp, const Hypothesis& g, int h, int s, int a) {
  const State st = State::tabular(s);
  double next = 0.0;
  for (const auto& t : mdp.transition_probs(h, s, a)) next += t.prob * g.tables().v_at(h + 1, t.next);
  return g.q_value(h, st, a) - mdp.expected_reward(h, st, a) - next;
}

HypothesisClass q_perturbation_class(const EpisodicMdp& mdp, int class_size, Rng& rng, double step) {
  if (class_size < 1) throw Error(ErrorCode::ConfigError, "class_size must be at least 1");
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  const auto star = value_iteration(mdp);
  const auto reach = reachable_states(mdp);
  std::vector<std::pair<int, int>> cells;  // (h, s) reachable
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      if (reach[h][s]) cells.emplace_back(h, s);
    }
  }
  std::vector<std::vector<double>> tables{star.values.q};
  static constexpr int kOffsets[] = {-3, -2, -1, 1, 2, 3};
  const std::size_t attempts = 500 * static_cast<std::size_t>(class_size);
  for (std::size_t k = 0; k < attempts && tables.size() < static_cast<std::size_t>(class_size); ++k) {
    auto q = star.values.q;
    const int edits = 1 + uniform_int(rng, 2);
    bool valid = true;
    for (int e = 0; e < edits; ++e) {
      const auto [h, s] = cells[uniform_int(rng, static_cast<int>(cells.size()))];
      const int a = uniform_int(rng, A);
      double& v = q[(static_cast<std::size_t>(h) * S + s) * A + a];
      v += kOffsets[uniform_int(rng, 6)] * step;
      valid = valid && v >= 0.0 && v <= H - h;
    }
    if (!valid) continue;
    if (std::find(tables.begin(), tables.end(), q) == tables.end()) tables.push_back(std::move(q));
  }
  HypothesisClass cls;
  const int n = static_cast<int>(tables.size());
  const int truth_pos = uniform_int(rng, n);
  // tables[0] is the truth; move it to truth_pos.
  std::swap(tables[0], tables[truth_pos]);
  for (int i = 0; i < n; ++i) {
    ValueTables t = ValueTables::zeros(H, S, A);
    t.q = std::move(tables[i]);
    cls.members.emplace_back(i, HypothesisKind::q_only, std::move(t));
  }
  cls.truth_index = truth_pos;
  return cls;
}

int occupancy_rank(const EpisodicMdp& mdp, const HypothesisClass& cls, EstimationRule rule) {
  const std::size_t cols = static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions();
  std::size_t best = 0;
  for (int h = 0; h < mdp.horizon(); ++h) {
    Matrix m(cls.size(), cols);
    for (std::size_t i = 0; i < cls.size(); ++i) {
      const auto d = rollin_distribution(mdp, cls[i], h, rule);
      std::copy(d.begin(), d.end(), m.row(i).begin());
    }
    best = std::max(best, numerical_rank(std::move(m), 1e-9));
  }
  return static_cast<int>(best);
}

void fill_witness_bounds(InstanceBundle& bundle) {
  if (!bundle.witness) return;
  auto& wit = *bundle.witness;
  double bw = 0.0;
  double bx = 0.0;
  int dim = 0;
  for (int h = 0; h < bundle.spec->horizon; ++h) {
    for (const auto& g : bundle.cls->members) {
      const auto w = wit.w(h, g);
      dim = static_cast<int>(w.size());
      bw = std::max(bw, norm2(w));
      bx = std::max(bx, norm2(wit.x(h, g)));
    }
  }
  // Bounds must be positive for the parameter schedule; a degenerate class keeps 1.
  wit.b_w = bw > 0.0 ? bw : 1.0;
  wit.b_x = bx > 0.0 ? bx : 1.0;
  bundle.meta.witness_dim = dim;
  bundle.meta.b_w = wit.b_w;
  bundle.meta.b_x = wit.b_x;
}

std::function<std::vector<double>(int, const Hypothesis&)> memoize(
    std::function<std::vector<double>(int, const Hypothesis&)> fn) {
  struct Cache {
    std::mutex mu;
    std::map<std::pair<int, int>, std::vector<double>> values;
  };
  auto cache = std::make_shared<Cache>();
  return [fn = std::move(fn), cache](int h, const Hypothesis& f) {
    const std::pair<int, int> key{h, f.id()};
    {
      std::lock_guard lock(cache->mu);
      if (auto it = cache->values.find(key); it != cache->values.end()) return it->second;
    }
    auto v = fn(h, f);
    std::lock_guard lock(cache->mu);
    cache->values.emplace(key, v);
    return v;
  };
}

double exact_v_star(const EpisodicMdp& mdp) {
  const auto star = value_iteration(mdp);
  return star.values.v_at(0, mdp.initial_state().id);
}

}  // namespace envs_detail
}  // namespace bilin
