#include <algorithm>
#include <cmath>
#include <memory>

#include "bilin/error.hpp"
#include "common.hpp"

namespace bilin {

using namespace envs_detail;

namespace {

// Linear MDP pieces: features phi(s,a), per-step next-state measures mu_{h,i}, reward weights.
struct LinearModel {
  int S = 0;
  int A = 0;
  int H = 0;
  int d = 0;
  std::vector<double> phi;                      // (s*A + a)*d + i
  std::vector<std::vector<std::vector<double>>> mu;  // [h][i][s']
  std::vector<double> reward_weights;

  double feature(int s, int a, int i) const { return phi[(static_cast<std::size_t>(s) * A + a) * d + i]; }
  double q(const std::vector<double>& theta, int s, int a) const {
    double v = 0.0;
    for (int i = 0; i < d; ++i) v += theta[i] * feature(s, a, i);
    return v;
  }

  std::vector<double> backup(int h, const std::vector<double>& next) const {
    std::vector<double> out = reward_weights;
    if (h + 1 >= H || next.empty()) return out;
    std::vector<double> vmax(S);
    for (int s = 0; s < S; ++s) {
      vmax[s] = q(next, s, 0);
      for (int a = 1; a < A; ++a) vmax[s] = std::max(vmax[s], q(next, s, a));
    }
    for (int i = 0; i < d; ++i) {
      for (int s = 0; s < S; ++s) out[i] += mu[h][i][s] * vmax[s];
    }
    return out;
  }

  TabularMdp mdp() const {
    TabularMdp out(S, A, H);
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          std::vector<Transition> row;
          double total = 0.0;
          for (int n = 0; n < S; ++n) {
            double p = 0.0;
            for (int i = 0; i < d; ++i) p += feature(s, a, i) * mu[h][i][n];
            if (p > 0.0) row.push_back({n, p});
            total += p;
          }
          for (auto& t : row) t.prob /= total;
          out.set_transitions(h, s, a, std::move(row));
          out.set_reward(h, s, a, std::clamp(q(reward_weights, s, a), 0.0, 1.0));
        }
      }
    }
    return out;
  }
};

LinearModel random_linear_model(int S, int A, int H, int d, Rng& rng) {
  LinearModel m;
  m.S = S;
  m.A = A;
  m.H = H;
  m.d = d;
  m.phi.assign(static_cast<std::size_t>(S) * A * d, 0.0);
  m.mu.assign(H, std::vector<std::vector<double>>(d));
  if (d == S * A) {
    // One-hot features: every (s,a) owns its next-state distribution.
    for (int k = 0; k < d; ++k) m.phi[static_cast<std::size_t>(k) * d + k] = 1.0;
    for (int h = 0; h < H; ++h) {
      for (auto& row : m.mu[h]) row = dirichlet(rng, S);
    }
  } else {
    for (int k = 0; k < S * A; ++k) {
      const auto p = dirichlet(rng, d);
      std::copy(p.begin(), p.end(), m.phi.begin() + static_cast<std::ptrdiff_t>(k) * d);
    }
    for (int h = 0; h < H; ++h) {
      for (auto& row : m.mu[h]) row = dirichlet(rng, S);
    }
  }
  m.reward_weights.resize(d);
  for (auto& w : m.reward_weights) w = uniform01(rng);
  return m;
}

std::shared_ptr<const FeatureMap> feature_map(const LinearModel& m) {
  if (m.d == m.S * m.A) return std::make_shared<OneHotFeatures>(OneHotFeatures::identity(m.S, m.A));
  return std::make_shared<TableFeatures>(m.S, m.A, static_cast<std::size_t>(m.d), m.phi);
}

std::vector<double> expected_feature(const EpisodicMdp& mdp, const LinearModel& m, const Hypothesis& f, int h) {
  const auto d = state_distribution(mdp, f, h);
  std::vector<double> out(m.d, 0.0);
  for (int s = 0; s < m.S; ++s) {
    if (d[s] == 0.0) continue;
    const int a = f.greedy_row(h, s);
    for (int i = 0; i < m.d; ++i) out[i] += d[s] * m.feature(s, a, i);
  }
  return out;
}

}  // namespace

InstanceBundle make_linear_qv(std::shared_ptr<const TabularMdp> mdp, const std::vector<int>& cluster_of,
                              std::uint64_t seed, std::size_t class_size, double grid) {
  if (!is_q_star_irrelevant(*mdp, cluster_of)) {
    throw Error(ErrorCode::NotIrrelevant, "aggregation merges states with different optimal values");
  }
  const int S = mdp->num_states();
  const int A = mdp->num_actions();
  const int H = mdp->horizon();
  AggregationOptions opts;
  opts.grid_step = grid;
  opts.max_members = class_size;
  opts.seed = seed;
  auto cls = std::make_shared<const HypothesisClass>(build_aggregation_class(*mdp, cluster_of, opts));
  auto features = std::make_shared<OneHotFeatures>(cluster_of, A);

  InstanceBundle b;
  b.mdp = mdp;
  b.cls = cls;
  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::linear_qv;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = S;
  spec->loss_bound = H + 1.0;
  spec->features = features;
  b.spec = spec;

  const std::size_t dphi = features->phi_dim();
  const std::size_t dpsi = features->psi_dim();
  BilinearWitness wit;
  // The mean reward equals w*.phi - theta*.E psi(s'), so W is measured relative to the truth.
  wit.w = [cls, dphi, dpsi, H](int h, const Hypothesis& g) {
    const auto& truth = cls->truth().payload();
    std::vector<double> out(dphi + dpsi, 0.0);
    for (std::size_t i = 0; i < dphi; ++i) out[i] = g.payload().w[h][i] - truth.w[h][i];
    if (h + 1 < H) {
      for (std::size_t i = 0; i < dpsi; ++i) out[dphi + i] = g.payload().theta[h + 1][i] - truth.theta[h + 1][i];
    }
    return out;
  };
  wit.x = [mdp, features, dphi, dpsi, S](int h, const Hypothesis& f) {
    const auto d = state_distribution(*mdp, f, h);
    std::vector<double> out(dphi + dpsi, 0.0);
    for (int s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      const State st = State::tabular(s);
      const int a = f.greedy_row(h, s);
      out[features->index(st, a)] += d[s];
      for (const auto& t : mdp->transition_probs(h, s, a)) {
        const auto psi = features->psi(h + 1, State::tabular(t.next));
        for (std::size_t i = 0; i < dpsi; ++i) out[dphi + i] -= d[s] * t.prob * psi[i];
      }
    }
    return out;
  };
  b.witness = std::move(wit);
  b.meta.generator = "linear_qv";
  b.meta.params = {{"S", S}, {"A", A}, {"H", H}, {"class_size", static_cast<double>(class_size)}, {"grid", grid}};
  b.meta.seed = seed;
  b.meta.v_star = exact_v_star(*mdp);
  fill_witness_bounds(b);
  return b;
}

InstanceBundle make_linear_qv_random(int base_states, int duplicates, int A, int H, std::uint64_t seed,
                                     std::size_t class_size) {
  if (duplicates < 0 || duplicates > base_states) {
    throw Error(ErrorCode::ConfigError, "duplicates must lie in [0, base_states]");
  }
  Rng rng = make_rng(seed, 0, "env-linear-qv");
  const TabularMdp base = random_tabular_mdp(base_states, A, H, rng);
  const int S = base_states + duplicates;
  auto mdp = std::make_shared<TabularMdp>(S, A, H);
  std::vector<int> cluster_of(S);
  for (int s = 0; s < S; ++s) cluster_of[s] = s < base_states ? s : s - base_states;
  // Mass entering a duplicated state is split at random between it and its copy.
  std::vector<double> split(base_states, 1.0);
  for (int j = 0; j < duplicates; ++j) split[j] = 0.2 + 0.6 * uniform01(rng);
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      const int src = cluster_of[s];
      for (int a = 0; a < A; ++a) {
        std::vector<Transition> row;
        for (const auto& t : base.transition_probs(h, src, a)) {
          if (t.next < duplicates) {
            row.push_back({t.next, t.prob * split[t.next]});
            row.push_back({base_states + t.next, t.prob * (1.0 - split[t.next])});
          } else {
            row.push_back(t);
          }
        }
        std::sort(row.begin(), row.end(), [](const Transition& x, const Transition& y) { return x.next < y.next; });
        mdp->set_transitions(h, s, a, std::move(row));
        mdp->set_reward(h, s, a, base.expected_reward(h, State::tabular(src), a));
      }
    }
  }
  auto b = make_linear_qv(mdp, cluster_of, seed, class_size);
  b.meta.params = {{"base_states", base_states},
                   {"duplicates", duplicates},
                   {"A", A},
                   {"H", H},
                   {"class_size", static_cast<double>(class_size)}};
  return b;
}

InstanceBundle make_bellman_complete(int S, int A, int H, int d, std::uint64_t seed, int class_size) {
  if (d < 1) throw Error(ErrorCode::ConfigError, "bellman_complete needs d >= 1");
  Rng rng = make_rng(seed, 0, "env-bellman-complete");
  auto model = std::make_shared<const LinearModel>(random_linear_model(S, A, H, d, rng));
  auto mdp = std::make_shared<const TabularMdp>(model->mdp());

  std::vector<std::vector<double>> star(H);
  for (int h = H - 1; h >= 0; --h) star[h] = model->backup(h, h + 1 < H ? star[h + 1] : std::vector<double>{});

  auto q_of = [&](const std::vector<std::vector<double>>& theta) {
    ValueTables t = ValueTables::zeros(H, S, A);
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) t.q_at(h, s, a) = model->q(theta[h], s, a);
      }
    }
    return t;
  };

  std::vector<std::vector<std::vector<double>>> params{star};
  static constexpr int kOffsets[] = {-3, -2, -1, 1, 2, 3};
  for (int k = 0; k < 500 * class_size && static_cast<int>(params.size()) < class_size; ++k) {
    auto cand = star;
    const int edits = 1 + uniform_int(rng, 2);
    for (int e = 0; e < edits; ++e) cand[uniform_int(rng, H)][uniform_int(rng, d)] += kOffsets[uniform_int(rng, 6)] * 0.1;
    const auto t = q_of(cand);
    bool valid = true;
    for (int h = 0; h < H && valid; ++h) {
      for (int s = 0; s < S && valid; ++s) {
        for (int a = 0; a < A; ++a) valid = valid && t.q_at(h, s, a) >= 0.0 && t.q_at(h, s, a) <= H - h;
      }
    }
    if (valid && std::find(params.begin(), params.end(), cand) == params.end()) params.push_back(std::move(cand));
  }
  const int truth_pos = uniform_int(rng, static_cast<int>(params.size()));
  std::swap(params[0], params[truth_pos]);
  HypothesisClass cls;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Payload p;
    p.w = params[i];
    cls.members.emplace_back(static_cast<int>(i), HypothesisKind::q_only, q_of(params[i]), std::move(p));
  }
  cls.truth_index = truth_pos;

  InstanceBundle b;
  b.mdp = mdp;
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::bellman_complete;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = S;
  spec->loss_bound = H + 1.0;
  spec->features = feature_map(*model);
  b.spec = spec;
  b.backup = [model](int h, const std::vector<double>& next) { return model->backup(h, next); };

  BilinearWitness wit;
  wit.w = [model, H](int h, const Hypothesis& g) {
    const auto& w = g.payload().w;
    auto out = w[h];
    const auto next = model->backup(h, h + 1 < H ? w[h + 1] : std::vector<double>{});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= next[i];
    return out;
  };
  wit.x = [mdp, model](int h, const Hypothesis& f) { return expected_feature(*mdp, *model, f, h); };
  b.witness = std::move(wit);
  b.meta.generator = "bellman_complete";
  b.meta.params = {{"S", S}, {"A", A}, {"H", H}, {"d", d}, {"class_size", class_size}};
  b.meta.seed = seed;
  b.meta.v_star = exact_v_star(*mdp);
  fill_witness_bounds(b);
  return b;
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

double link_slope(double x, double scale) {
  const double l = 1.0 / (1.0 + std::exp(-x));
  return scale * l * (1.0 - l);
}

}  // namespace

InstanceBundle make_glm(int S, int A, int H, int class_size, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0, "env-glm");
  auto mdp = std::make_shared<const TabularMdp>(random_tabular_mdp(S, A, H, rng, 0, 0.05, 0.8));
  const double scale = H;
  const auto star = value_iteration(*mdp);
  const auto reach = reachable_states(*mdp);
  const std::size_t SA = static_cast<std::size_t>(S) * A;

  // Hypotheses are value tables mapped into logit space; values stay below 0.9 (H - h).
  std::vector<std::vector<std::vector<double>>> values;
  {
    std::vector<std::vector<double>> q(H, std::vector<double>(SA));
    for (int h = 0; h < H; ++h) {
      for (std::size_t k = 0; k < SA; ++k) q[h][k] = star.values.q[h * SA + k];
    }
    values.push_back(std::move(q));
  }
  static constexpr int kOffsets[] = {-3, -2, -1, 1, 2, 3};
  for (int k = 0; k < 500 * class_size && static_cast<int>(values.size()) < class_size; ++k) {
    auto cand = values.front();
    const int edits = 1 + uniform_int(rng, 2);
    bool valid = true;
    for (int e = 0; e < edits; ++e) {
      const int h = uniform_int(rng, H);
      const int s = uniform_int(rng, S);
      if (!reach[h][s]) {
        valid = false;
        break;
      }
      double& v = cand[h][static_cast<std::size_t>(s) * A + uniform_int(rng, A)];
      v += kOffsets[uniform_int(rng, 6)] * 0.1;
      valid = valid && v >= 0.02 && v <= 0.9 * (H - h);
    }
    if (valid && std::find(values.begin(), values.end(), cand) == values.end()) values.push_back(std::move(cand));
  }
  const int truth_pos = uniform_int(rng, static_cast<int>(values.size()));
  std::swap(values[0], values[truth_pos]);

  HypothesisClass cls;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Payload p;
    ValueTables t = ValueTables::zeros(H, S, A);
    for (int h = 0; h < H; ++h) {
      std::vector<double> theta(SA);
      for (std::size_t k = 0; k < SA; ++k) {
        theta[k] = logit(values[i][h][k] / scale);
        t.q[h * SA + k] = scaled_logistic(theta[k], scale);
      }
      p.w.push_back(std::move(theta));
    }
    cls.members.emplace_back(static_cast<int>(i), HypothesisKind::q_only, std::move(t), std::move(p));
  }
  cls.truth_index = truth_pos;

  // Logit-space Bellman backup of the next-step parameters.
  auto backup = [mdp, S, A, H, scale](int h, const std::vector<double>& next) {
    std::vector<double> out(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double target = mdp->expected_reward(h, State::tabular(s), a);
        if (h + 1 < H && !next.empty()) {
          for (const auto& t : mdp->transition_probs(h, s, a)) {
            double best = 0.0;
            for (int b = 0; b < A; ++b) {
              best = std::max(best, scaled_logistic(next[static_cast<std::size_t>(t.next) * A + b], scale));
            }
            target += t.prob * best;
          }
        }
        out[static_cast<std::size_t>(s) * A + a] = logit(target / scale);
      }
    }
    return out;
  };

  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::glm_complete;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = S;
  spec->features = std::make_shared<OneHotFeatures>(OneHotFeatures::identity(S, A));
  spec->link_scale = scale;
  spec->discriminators.resize(H);
  double slope_lower = scale / 4.0;
  for (int h = 0; h < H; ++h) {
    std::vector<std::vector<double>> anchors;
    for (const auto& g : cls.members) {
      const auto& w = g.payload().w;
      for (auto cand : {w[h], backup(h, h + 1 < H ? w[h + 1] : std::vector<double>{})}) {
        if (std::find(anchors.begin(), anchors.end(), cand) == anchors.end()) anchors.push_back(std::move(cand));
      }
    }
    for (const auto& x : anchors) {
      for (double v : x) slope_lower = std::min(slope_lower, link_slope(v, scale));
    }
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      for (std::size_t j = 0; j < anchors.size(); ++j) {
        if (i == j) continue;
        Discriminator nu;
        nu.values.resize(SA);
        for (std::size_t k = 0; k < SA; ++k) {
          nu.values[k] = scaled_logistic(anchors[i][k], scale) - scaled_logistic(anchors[j][k], scale);
        }
        spec->discriminators[h].push_back(std::move(nu));
      }
    }
    if (spec->discriminators[h].empty()) spec->discriminators[h].push_back(Discriminator{std::vector<double>(SA, 0.0)});
  }
  spec->slope_lower = slope_lower;
  spec->slope_upper = scale / 4.0;
  spec->xi = Transform::square_root(spec->slope_upper);
  spec->zeta = Transform::linear(slope_lower * slope_lower);
  spec->beta = slope_lower * slope_lower;
  spec->loss_bound = scale * (H + 1.0);

  InstanceBundle b;
  b.mdp = mdp;
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  b.spec = spec;
  b.backup = backup;
  BilinearWitness wit;
  wit.w = [backup, H, SA](int h, const Hypothesis& g) {
    const auto& w = g.payload().w;
    const auto target = backup(h, h + 1 < H ? w[h + 1] : std::vector<double>{});
    std::vector<double> out(SA);
    for (std::size_t k = 0; k < SA; ++k) out[k] = (w[h][k] - target[k]) * (w[h][k] - target[k]);
    return out;
  };
  wit.x = [mdp](int h, const Hypothesis& f) { return rollin_distribution(*mdp, f, h, EstimationRule::on_policy); };
  wit.exact_identity = false;
  b.witness = std::move(wit);
  b.meta.generator = "glm";
  b.meta.params = {{"S", S}, {"A", A}, {"H", H}, {"class_size", class_size}};
  b.meta.seed = seed;
  b.meta.v_star = exact_v_star(*mdp);
  fill_witness_bounds(b);
  return b;
}

}  // namespace bilin
