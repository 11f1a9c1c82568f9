#include "bilin/hypothesis.hpp"

#include <algorithm>
#include <cmath>

#include "bilin/error.hpp"

namespace bilin {

const char* to_string(HypothesisKind kind) noexcept {
  switch (kind) {
    case HypothesisKind::value_pair: return "value_pair";
    case HypothesisKind::q_only: return "q_only";
    case HypothesisKind::model_backed: return "model_backed";
  }
  return "unknown";
}

HypothesisKind parse_hypothesis_kind(const std::string& name) {
  if (name == "value_pair") return HypothesisKind::value_pair;
  if (name == "q_only") return HypothesisKind::q_only;
  if (name == "model_backed") return HypothesisKind::model_backed;
  throw Error(ErrorCode::SchemaMismatch, "unknown hypothesis kind '" + name + "'");
}

Hypothesis::Hypothesis(int id, HypothesisKind kind, ValueTables tables, Payload payload,
                       std::shared_ptr<const StateIndexer> indexer)
    : id_(id), kind_(kind), tables_(std::move(tables)), payload_(std::move(payload)), indexer_(std::move(indexer)) {
  const int H = tables_.horizon;
  const int rows = tables_.rows;
  const int A = tables_.actions;
  if (tables_.q.size() != static_cast<std::size_t>(H) * rows * A ||
      tables_.v.size() != static_cast<std::size_t>(H + 1) * rows) {
    throw Error(ErrorCode::DimensionMismatch, "value tables have inconsistent sizes");
  }
  if (indexer_ && indexer_->rows() != rows) throw Error(ErrorCode::DimensionMismatch, "indexer row count mismatch");
  greedy_.assign(static_cast<std::size_t>(H) * rows, 0);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < rows; ++s) {
      int best_a = 0;
      for (int a = 1; a < A; ++a) {
        if (tables_.q_at(h, s, a) > tables_.q_at(h, s, best_a)) best_a = a;
      }
      greedy_[static_cast<std::size_t>(h) * rows + s] = best_a;
      if (kind_ != HypothesisKind::value_pair) tables_.v_at(h, s) = tables_.q_at(h, s, best_a);
    }
  }
  for (int s = 0; s < rows; ++s) tables_.v_at(H, s) = 0.0;
}

Hypothesis Hypothesis::relabeled(int id) const {
  Hypothesis copy = *this;
  copy.id_ = id;
  return copy;
}

const Hypothesis& HypothesisClass::truth() const {
  if (!truth_index) throw Error(ErrorCode::ConfigError, "class has no designated truth member");
  return members.at(static_cast<std::size_t>(*truth_index));
}

GreedyPolicy greedy_policy(const Hypothesis& f) { return GreedyPolicy(f); }

bool check_greedy_consistency(const Hypothesis& f, const EpisodicMdp& mdp, double tol) {
  if (!mdp.is_tabular()) {
    throw Error(ErrorCode::NotEnumerable, "vector-state space; use spot_check_greedy_consistency");
  }
  const auto& t = f.tables();
  for (int h = 0; h < t.horizon; ++h) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      const int r = f.row(State::tabular(s));
      double best = t.q_at(h, r, 0);
      for (int a = 1; a < t.actions; ++a) best = std::max(best, t.q_at(h, r, a));
      if (std::abs(t.v_at(h, r) - best) > tol) return false;
    }
  }
  return true;
}

bool spot_check_greedy_consistency(const Hypothesis& f, const std::function<State(Rng&)>& sampler, Rng& rng,
                                   std::size_t samples, double tol) {
  for (std::size_t i = 0; i < samples; ++i) {
    const State s = sampler(rng);
    const int h = uniform_int(rng, f.horizon());
    double best = f.q_value(h, s, 0);
    for (int a = 1; a < f.num_actions(); ++a) best = std::max(best, f.q_value(h, s, a));
    if (std::abs(f.v_value(h, s) - best) > tol) return false;
  }
  return true;
}

ValueTables model_to_values(const TabularKernel& model) {
  const int H = model.horizon;
  const int S = model.num_states;
  const int A = model.num_actions;
  ValueTables t = ValueTables::zeros(H, S, A);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double best = 0.0;
      for (int a = 0; a < A; ++a) {
        const auto row = model.row(h, s, a);
        double q = model.reward(h, s, a);
        for (int n = 0; n < S; ++n) q += row[n] * t.v_at(h + 1, n);
        t.q_at(h, s, a) = q;
        if (a == 0 || q > best) best = q;
      }
      t.v_at(h, s) = best;
    }
  }
  return t;
}

bool check_realizability(const HypothesisClass& cls, const EpisodicMdp& mdp, double tol) {
  if (!cls.truth_index) return false;
  const Hypothesis& f = cls.truth();
  const auto star = value_iteration(mdp);
  const auto reach = reachable_states(mdp);
  for (int h = 0; h < mdp.horizon(); ++h) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (!reach[h][s]) continue;
      const State st = State::tabular(s);
      if (std::abs(f.v_value(h, st) - star.values.v_at(h, s)) > tol) return false;
      for (int a = 0; a < mdp.num_actions(); ++a) {
        if (std::abs(f.q_value(h, st, a) - star.values.q_at(h, s, a)) > tol) return false;
      }
    }
  }
  return true;
}

bool is_q_star_irrelevant(const EpisodicMdp& mdp, const std::vector<int>& cluster_of, double tol) {
  const int S = mdp.num_states();
  if (cluster_of.size() != static_cast<std::size_t>(S)) {
    throw Error(ErrorCode::DimensionMismatch, "aggregation map must cover every state");
  }
  const auto star = value_iteration(mdp);
  for (int h = 0; h < mdp.horizon(); ++h) {
    for (int s1 = 0; s1 < S; ++s1) {
      for (int s2 = s1 + 1; s2 < S; ++s2) {
        if (cluster_of[s1] != cluster_of[s2]) continue;
        for (int a = 0; a < mdp.num_actions(); ++a) {
          if (std::abs(star.values.q_at(h, s1, a) - star.values.q_at(h, s2, a)) > tol) return false;
        }
      }
    }
  }
  return true;
}

namespace {

struct LinearPair {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> theta;
};

Hypothesis linear_pair_hypothesis(int id, const LinearPair& p, const std::vector<int>& cluster_of, int H, int A) {
  const int S = static_cast<int>(cluster_of.size());
  ValueTables t = ValueTables::zeros(H, S, A);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      const int c = cluster_of[s];
      for (int a = 0; a < A; ++a) t.q_at(h, s, a) = p.w[h][static_cast<std::size_t>(c) * A + a];
      t.v_at(h, s) = p.theta[h][c];
    }
  }
  Payload payload;
  payload.w = p.w;
  payload.theta = p.theta;
  return Hypothesis(id, HypothesisKind::value_pair, std::move(t), std::move(payload));
}

// Paired constraint max_a w.phi(s,a) = theta.psi(s) on every enumerated state.
bool pair_consistent(const std::vector<double>& w, const std::vector<double>& theta,
                     const std::vector<int>& cluster_of, int A, double tol) {
  for (int c : cluster_of) {
    double best = w[static_cast<std::size_t>(c) * A];
    for (int a = 1; a < A; ++a) best = std::max(best, w[static_cast<std::size_t>(c) * A + a]);
    if (std::abs(best - theta[c]) > tol) return false;
  }
  return true;
}

}  // namespace

HypothesisClass build_aggregation_class(const EpisodicMdp& mdp, const std::vector<int>& cluster_of,
                                        const AggregationOptions& options) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  if (cluster_of.size() != static_cast<std::size_t>(S)) {
    throw Error(ErrorCode::DimensionMismatch, "aggregation map must cover every state");
  }
  const int C = *std::max_element(cluster_of.begin(), cluster_of.end()) + 1;
  std::vector<int> representative(C, -1);
  for (int s = 0; s < S; ++s) {
    if (cluster_of[s] < 0) throw Error(ErrorCode::DimensionMismatch, "negative cluster id");
    if (representative[cluster_of[s]] < 0) representative[cluster_of[s]] = s;
  }
  const auto star = value_iteration(mdp);
  LinearPair truth;
  for (int h = 0; h < H; ++h) {
    std::vector<double> w(static_cast<std::size_t>(C) * A, 0.0);
    std::vector<double> theta(C, 0.0);
    for (int c = 0; c < C; ++c) {
      if (representative[c] < 0) continue;
      for (int a = 0; a < A; ++a) w[static_cast<std::size_t>(c) * A + a] = star.values.q_at(h, representative[c], a);
      theta[c] = star.values.v_at(h, representative[c]);
    }
    truth.w.push_back(std::move(w));
    truth.theta.push_back(std::move(theta));
  }

  Rng rng = make_rng(options.seed, 0, "aggregation-class");
  std::vector<LinearPair> others;
  const double step = options.grid_step;
  const std::size_t attempts = 200 * std::max<std::size_t>(options.max_members, 1);
  for (std::size_t k = 0; k < attempts && others.size() + 1 < options.max_members; ++k) {
    LinearPair cand = truth;
    bool changed = false;
    bool valid = true;
    for (int h = 0; h < H && valid; ++h) {
      if (uniform01(rng) < 0.5) continue;
      const int c = uniform_int(rng, C);
      const int a = uniform_int(rng, A);
      static constexpr int kOffsets[] = {-2, -1, 1, 2};
      cand.w[h][static_cast<std::size_t>(c) * A + a] += kOffsets[uniform_int(rng, 4)] * step;
      // Nearest grid point to the new cluster maximum, then filter the pair.
      double best = cand.w[h][static_cast<std::size_t>(c) * A];
      for (int b = 1; b < A; ++b) best = std::max(best, cand.w[h][static_cast<std::size_t>(c) * A + b]);
      const double base = truth.theta[h][c];
      cand.theta[h][c] = base + std::round((best - base) / step) * step;
      valid = pair_consistent(cand.w[h], cand.theta[h], cluster_of, A, 1e-9);
      for (double q : cand.w[h]) valid = valid && q >= 0.0 && q <= H;
      changed = true;
    }
    if (!valid || !changed) continue;
    const bool duplicate = std::any_of(others.begin(), others.end(), [&](const LinearPair& o) {
      return o.w == cand.w && o.theta == cand.theta;
    });
    if (!duplicate) others.push_back(std::move(cand));
  }

  HypothesisClass cls;
  const int truth_pos = uniform_int(rng, static_cast<int>(others.size()) + 1);
  int next_other = 0;
  for (int i = 0; i <= static_cast<int>(others.size()); ++i) {
    const LinearPair& p = i == truth_pos ? truth : others[next_other++];
    cls.members.push_back(linear_pair_hypothesis(i, p, cluster_of, H, A));
  }
  cls.truth_index = truth_pos;
  return cls;
}

}  // namespace bilin
