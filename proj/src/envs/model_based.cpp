#include <algorithm>
#include <cmath>
#include <memory>

#include "bilin/error.hpp"
#include "common.hpp"

namespace bilin {

using namespace envs_detail;

namespace {

constexpr std::size_t kMaxDiscriminatorBits = 12;

// Moves up to `delta` probability mass from one entry of a distribution to another.
bool shift_mass(std::span<double> row, Rng& rng, double delta) {
  const int n = static_cast<int>(row.size());
  if (n < 2) return false;
  const int from = uniform_int(rng, n);
  int to = uniform_int(rng, n - 1);
  if (to >= from) ++to;
  const double moved = std::min(delta, row[from]);
  if (moved <= 0.0) return false;
  row[from] -= moved;
  row[to] += moved;
  return true;
}

std::vector<double> l1_gap_at_greedy(const TabularKernel& truth, const Hypothesis& g, int h) {
  const auto& model = *g.payload().kernel;
  std::vector<double> out(truth.num_states);
  for (int s = 0; s < truth.num_states; ++s) {
    const int a = g.greedy_row(h, s);
    const auto p = truth.row(h, s, a);
    const auto q = model.row(h, s, a);
    for (int n = 0; n < truth.num_states; ++n) out[s] += std::abs(q[n] - p[n]);
  }
  return out;
}

}  // namespace

InstanceBundle make_witness(int S, int A, int H, int class_size, std::uint64_t seed) {
  const std::size_t bits = static_cast<std::size_t>(S) * A * S;
  if (bits > kMaxDiscriminatorBits) {
    throw Error(ErrorCode::BudgetExceeded, "witness instance needs at most 12 (s,a,s') cells");
  }
  Rng rng = make_rng(seed, 0, "env-witness");
  const TabularMdp base = random_tabular_mdp(S, A, H, rng, 0, 0.0, 1.0, true);
  const TabularKernel truth = base.to_kernel();

  std::vector<TabularKernel> models{truth};
  static constexpr double kShifts[] = {0.1, 0.2, 0.3};
  for (int k = 0; k < 500 * class_size && static_cast<int>(models.size()) < class_size; ++k) {
    TabularKernel cand = truth;
    const int edits = 1 + uniform_int(rng, 2);
    bool changed = false;
    for (int e = 0; e < edits; ++e) {
      const int s = uniform_int(rng, S);
      const int a = uniform_int(rng, A);
      std::vector<double> row(cand.row(0, s, a).begin(), cand.row(0, s, a).end());
      changed = shift_mass(row, rng, kShifts[uniform_int(rng, 3)]) || changed;
      for (int h = 0; h < H; ++h) {
        for (int n = 0; n < S; ++n) cand.prob(h, s, a, n) = row[n];
      }
    }
    if (!changed) continue;
    const bool duplicate =
        std::any_of(models.begin(), models.end(), [&](const TabularKernel& m) { return m.p == cand.p; });
    if (!duplicate) models.push_back(std::move(cand));
  }
  const int truth_pos = uniform_int(rng, static_cast<int>(models.size()));
  std::swap(models[0], models[truth_pos]);
  HypothesisClass cls;
  for (std::size_t i = 0; i < models.size(); ++i) {
    auto kernel = std::make_shared<const TabularKernel>(std::move(models[i]));
    Payload p;
    p.kernel = kernel;
    cls.members.emplace_back(static_cast<int>(i), HypothesisKind::model_backed, model_to_values(*kernel),
                             std::move(p));
  }
  cls.truth_index = truth_pos;

  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::witness;
  spec->estimation = EstimationRule::uniform;
  spec->importance_weighted = true;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = S;
  spec->loss_bound = 2.0 * A;
  spec->xi = Transform::linear(H);
  std::vector<Discriminator> all;
  for (std::size_t nu = 0; nu < (std::size_t{1} << bits); ++nu) {
    Discriminator d;
    d.values.resize(bits);
    for (std::size_t k = 0; k < bits; ++k) d.values[k] = ((nu >> k) & 1U) ? 1.0 : -1.0;
    all.push_back(std::move(d));
  }
  spec->discriminators.assign(H, all);

  auto mdp = std::make_shared<const TabularMdp>(TabularMdp::from_kernel(truth));
  auto truth_kernel = std::make_shared<const TabularKernel>(truth);
  InstanceBundle b;
  b.mdp = mdp;
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  b.spec = spec;
  BilinearWitness wit;
  wit.w = [truth_kernel](int h, const Hypothesis& g) { return l1_gap_at_greedy(*truth_kernel, g, h); };
  wit.x = [mdp](int h, const Hypothesis& f) { return state_distribution(*mdp, f, h); };
  wit.kappa = 1.0 / H;
  b.witness = std::move(wit);
  b.meta.generator = "witness";
  b.meta.params = {{"S", S}, {"A", A}, {"H", H}, {"class_size", class_size}};
  b.meta.seed = seed;
  b.meta.v_star = exact_v_star(*mdp);
  fill_witness_bounds(b);
  return b;
}

namespace {

TabularKernel flatten(const FactorStructure& fs, const std::vector<double>& model, const std::vector<double>& rewards,
                      int H) {
  const int S = fs.num_states();
  const int A = fs.num_actions;
  const int O = fs.values_per_factor;
  TabularKernel k(S, A, H);
  std::vector<std::vector<int>> decoded(S);
  for (int s = 0; s < S; ++s) decoded[s] = fs.decode(s);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int n = 0; n < S; ++n) {
        double p = 1.0;
        for (int i = 0; i < fs.num_factors; ++i) {
          p *= model[fs.table_offset(i) + (static_cast<std::size_t>(fs.parent_config(i, s)) * A + a) * O +
                     decoded[n][i]];
        }
        for (int h = 0; h < H; ++h) k.prob(h, s, a, n) = p;
      }
      double r = 0.0;
      for (int i = 0; i < fs.num_factors; ++i) r += rewards[(static_cast<std::size_t>(i) * O + decoded[s][i]) * A + a];
      for (int h = 0; h < H; ++h) k.reward(h, s, a) = r / fs.num_factors;
    }
  }
  return k;
}

}  // namespace

InstanceBundle make_factored(int d, int O_size, std::vector<std::vector<int>> parent_sets, int A, int H,
                             std::uint64_t seed, int candidates_per_factor) {
  if (d < 1 || O_size < 2 || A < 1 || H < 1 || candidates_per_factor < 1) {
    throw Error(ErrorCode::ConfigError, "factored needs d >= 1, O >= 2 and positive A, H, candidates");
  }
  if (parent_sets.empty()) {
    for (int i = 0; i < d; ++i) parent_sets.push_back({i});
  }
  if (static_cast<int>(parent_sets.size()) != d) {
    throw Error(ErrorCode::DimensionMismatch, "one parent set per factor is required");
  }
  double table_entries = 0.0;
  for (const auto& pa : parent_sets) table_entries += A * std::pow(O_size, 1.0 + pa.size());
  if (table_entries > 4096.0) throw Error(ErrorCode::BudgetExceeded, "factor tables exceed 4096 entries");
  auto fs = std::make_shared<const FactorStructure>(d, O_size, A, parent_sets);
  Rng rng = make_rng(seed, 0, "env-factored");

  std::vector<double> truth(fs->model_size());
  for (int i = 0; i < d; ++i) {
    for (int u = 0; u < fs->parent_configs(i); ++u) {
      for (int a = 0; a < A; ++a) {
        const auto p = dirichlet(rng, O_size);
        std::copy(p.begin(), p.end(),
                  truth.begin() + static_cast<std::ptrdiff_t>(fs->table_offset(i) + (static_cast<std::size_t>(u) * A + a) * O_size));
      }
    }
  }
  std::vector<double> rewards(static_cast<std::size_t>(d) * O_size * A);
  for (auto& r : rewards) r = uniform01(rng);

  // Per-factor candidate tables; the true table sits at a random position in each list.
  std::vector<std::vector<std::vector<double>>> candidates(d);
  std::vector<int> truth_choice(d);
  static constexpr double kShifts[] = {0.15, 0.25};
  for (int i = 0; i < d; ++i) {
    const std::size_t off = fs->table_offset(i);
    const std::size_t size = fs->table_size(i);
    std::vector<double> own(truth.begin() + static_cast<std::ptrdiff_t>(off),
                            truth.begin() + static_cast<std::ptrdiff_t>(off + size));
    auto& list = candidates[i];
    list.push_back(own);
    for (int k = 0; k < 200 * candidates_per_factor && static_cast<int>(list.size()) < candidates_per_factor; ++k) {
      auto cand = own;
      bool changed = false;
      for (std::size_t cell = 0; cell < size / O_size; ++cell) {
        if (uniform01(rng) < 0.5) continue;
        changed = shift_mass({cand.data() + cell * O_size, static_cast<std::size_t>(O_size)}, rng,
                             kShifts[uniform_int(rng, 2)]) ||
                  changed;
      }
      if (changed && std::find(list.begin(), list.end(), cand) == list.end()) list.push_back(std::move(cand));
    }
    truth_choice[i] = uniform_int(rng, static_cast<int>(list.size()));
    std::swap(list[0], list[truth_choice[i]]);
  }

  HypothesisClass cls;
  std::vector<int> choice(d, 0);
  for (int id = 0;; ++id) {
    Payload p;
    p.model.resize(fs->model_size());
    for (int i = 0; i < d; ++i) {
      const auto& table = candidates[i][choice[i]];
      std::copy(table.begin(), table.end(), p.model.begin() + static_cast<std::ptrdiff_t>(fs->table_offset(i)));
    }
    auto kernel = std::make_shared<const TabularKernel>(flatten(*fs, p.model, rewards, H));
    p.kernel = kernel;
    cls.members.emplace_back(id, HypothesisKind::model_backed, model_to_values(*kernel), std::move(p));
    if (choice == truth_choice) cls.truth_index = id;
    // Odometer with factor 0 most significant.
    int i = d - 1;
    while (i >= 0 && ++choice[i] == static_cast<int>(candidates[i].size())) choice[i--] = 0;
    if (i < 0) break;
  }

  auto mdp = std::make_shared<const TabularMdp>(TabularMdp::from_kernel(flatten(*fs, truth, rewards, H)));
  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::factored;
  spec->estimation = EstimationRule::uniform;
  spec->importance_weighted = false;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = fs->num_states();
  spec->loss_bound = 2.0 * d;
  spec->xi = Transform::linear(A * H / 2.0);
  spec->factors = fs;

  InstanceBundle b;
  b.mdp = mdp;
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  b.spec = spec;
  BilinearWitness wit;
  wit.w = [truth](int, const Hypothesis& g) {
    const auto& m = g.payload().model;
    std::vector<double> out(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) out[k] = std::abs(m[k] - truth[k]);
    return out;
  };
  wit.x = [mdp, fs](int h, const Hypothesis& f) {
    const auto d_state = state_distribution(*mdp, f, h);
    const int A_ = fs->num_actions;
    const int O = fs->values_per_factor;
    std::vector<double> out(fs->model_size(), 0.0);
    for (int i = 0; i < fs->num_factors; ++i) {
      std::vector<double> config_mass(fs->parent_configs(i), 0.0);
      for (int s = 0; s < fs->num_states(); ++s) config_mass[fs->parent_config(i, s)] += d_state[s];
      for (int u = 0; u < fs->parent_configs(i); ++u) {
        for (int a = 0; a < A_; ++a) {
          for (int o = 0; o < O; ++o) {
            out[fs->table_offset(i) + (static_cast<std::size_t>(u) * A_ + a) * O + o] = config_mass[u] / A_;
          }
        }
      }
    }
    return out;
  };
  b.witness = std::move(wit);
  b.meta.generator = "factored";
  b.meta.params = {{"d", d}, {"O", O_size}, {"A", A}, {"H", H}, {"candidates", candidates_per_factor}};
  b.meta.seed = seed;
  b.meta.v_star = exact_v_star(*mdp);
  fill_witness_bounds(b);
  return b;
}

}  // namespace bilin
