#include <algorithm>
#include <cmath>
#include <memory>

#include "bilin/error.hpp"
#include "bilin/linalg.hpp"
#include "common.hpp"

namespace bilin {

using namespace envs_detail;

namespace {

// All compositions of n into k parts, lexicographic.
void compositions(int n, int k, std::vector<int>& current, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == k - 1) {
    current.push_back(n);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int v = 0; v <= n; ++v) {
    current.push_back(v);
    compositions(n - v, k, current, out);
    current.pop_back();
  }
}

// Largest-remainder rounding of a simplex point onto multiples of 1/n.
std::vector<int> snap_to_grid(const std::vector<double>& p, int n) {
  const int k = static_cast<int>(p.size());
  std::vector<int> units(k);
  std::vector<std::pair<double, int>> rem;
  int used = 0;
  for (int i = 0; i < k; ++i) {
    const double scaled = p[i] * n;
    units[i] = static_cast<int>(std::floor(scaled));
    used += units[i];
    rem.emplace_back(scaled - units[i], i);
  }
  std::sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  for (int j = 0; used < n; ++j, ++used) ++units[rem[j].second];
  return units;
}

TabularKernel mix(const MixtureBasis& basis, const std::vector<double>& theta) {
  const auto& first = basis.bases.front();
  TabularKernel out(first.num_states, first.num_actions, first.horizon);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto& base = basis.bases[k];
    for (std::size_t i = 0; i < out.p.size(); ++i) out.p[i] += theta[k] * base.p[i];
    for (std::size_t i = 0; i < out.r.size(); ++i) out.r[i] += theta[k] * base.r[i];
  }
  return out;
}

}  // namespace

InstanceBundle make_tabular_mixture(int S, int A, int H, int num_base_models, double grid, std::uint64_t seed,
                                    bool identical_bases) {
  if (num_base_models < 1) throw Error(ErrorCode::ConfigError, "mixture needs at least one base model");
  if (!(grid > 0.0) || grid > 1.0) throw Error(ErrorCode::ConfigError, "mixture grid must be in (0, 1]");
  const int n = static_cast<int>(std::lround(1.0 / grid));
  if (std::abs(n * grid - 1.0) > 1e-9) throw Error(ErrorCode::ConfigError, "mixture grid must divide 1");
  Rng rng = make_rng(seed, 0, "env-mixture");

  auto basis = std::make_shared<MixtureBasis>();
  for (int k = 0; k < num_base_models; ++k) {
    if (identical_bases && k > 0) {
      basis->bases.push_back(basis->bases.front());
      continue;
    }
    const TabularMdp base = random_tabular_mdp(S, A, H, rng, 0, 0.0, 1.0, true);
    basis->bases.push_back(base.to_kernel());
  }

  std::vector<std::vector<int>> grid_points;
  std::vector<int> scratch;
  compositions(n, num_base_models, scratch, grid_points);
  const auto truth_units = snap_to_grid(dirichlet(rng, num_base_models), n);

  HypothesisClass cls;
  for (std::size_t i = 0; i < grid_points.size(); ++i) {
    std::vector<double> theta(num_base_models);
    for (int k = 0; k < num_base_models; ++k) theta[k] = static_cast<double>(grid_points[i][k]) / n;
    auto kernel = std::make_shared<const TabularKernel>(mix(*basis, theta));
    Payload payload;
    payload.theta.assign(H, theta);
    payload.kernel = kernel;
    cls.members.emplace_back(static_cast<int>(i), HypothesisKind::model_backed, model_to_values(*kernel),
                             std::move(payload));
    if (grid_points[i] == truth_units) cls.truth_index = static_cast<int>(i);
  }

  const auto& truth_kernel = *cls.members[*cls.truth_index].payload().kernel;
  auto mdp = std::make_shared<const TabularMdp>(TabularMdp::from_kernel(truth_kernel));

  InstanceBundle b;
  b.mdp = mdp;
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::mixture;
  spec->horizon = H;
  spec->num_actions = A;
  spec->num_states = S;
  spec->loss_bound = H + 1.0;
  spec->mixture = basis;
  b.spec = spec;

  BilinearWitness wit;
  wit.w = [](int h, const Hypothesis& g) { return g.payload().theta.at(h); };
  wit.x = [mdp, basis, S, H](int h, const Hypothesis& f) {
    const auto d = state_distribution(*mdp, f, h);
    std::vector<double> out(basis->size(), 0.0);
    for (int s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      const int a = f.greedy_row(h, s);
      for (std::size_t k = 0; k < basis->size(); ++k) {
        const auto& base = basis->bases[k];
        double term = base.reward(h, s, a);
        if (h + 1 < H) {
          const auto row = base.row(h, s, a);
          for (int nx = 0; nx < S; ++nx) term += row[nx] * f.tables().v_at(h + 1, nx);
        }
        out[k] += d[s] * term;
      }
    }
    // The observed part r + V_f(s') is the same for every g, so it enters through the simplex constraint.
    double observed = 0.0;
    for (int s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      const int a = f.greedy_row(h, s);
      double next = 0.0;
      for (const auto& t : mdp->transition_probs(h, s, a)) next += t.prob * f.tables().v_at(h + 1, t.next);
      observed += d[s] * (mdp->expected_reward(h, State::tabular(s), a) + next);
    }
    for (auto& v : out) v -= observed;
    return out;
  };
  b.witness = std::move(wit);
  b.meta.generator = "mixture";
  b.meta.params = {{"S", S}, {"A", A}, {"H", H}, {"K", num_base_models}, {"grid", grid},
                   {"identical", identical_bases ? 1.0 : 0.0}};
  b.meta.seed = seed;
  b.meta.v_star = exact_v_star(*mdp);
  fill_witness_bounds(b);
  return b;
}

}  // namespace bilin
