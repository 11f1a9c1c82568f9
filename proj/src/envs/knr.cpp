#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "bilin/error.hpp"
#include "bilin/linalg.hpp"
#include "common.hpp"

namespace bilin {

using namespace envs_detail;

KnrMdp::KnrMdp(std::shared_ptr<const RandomFourierFeatures> features, std::vector<double> op, double sigma,
               int horizon, int num_actions, std::vector<double> goal)
    : features_(std::move(features)),
      op_(std::move(op)),
      sigma_(sigma),
      horizon_(horizon),
      num_actions_(num_actions),
      state_dim_(static_cast<int>(features_->state_dim())),
      goal_(std::move(goal)) {
  if (op_.size() != features_->phi_dim() * features_->state_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "operator shape does not match the features");
  }
}

double KnrMdp::state_reward(const std::vector<double>& x) const {
  double sq = 0.0;
  for (int k = 0; k < state_dim_; ++k) sq += (x[k] - goal_[k]) * (x[k] - goal_[k]);
  return std::clamp(1.0 - sq, 0.0, 1.0);
}

double KnrMdp::reward(int, const State& s, int, Rng&) const { return state_reward(s.x); }
double KnrMdp::expected_reward(int, const State& s, int) const { return state_reward(s.x); }

State KnrMdp::transition(int h, const State& s, int a, Rng& rng) const {
  const auto phi = features_->phi(h, s, a);
  const std::size_t dphi = phi.size();
  std::vector<double> next(state_dim_);
  for (int k = 0; k < state_dim_; ++k) {
    double mean = 0.0;
    for (std::size_t j = 0; j < dphi; ++j) mean += op_[k * dphi + j] * phi[j];
    next[k] = mean + sigma_ * standard_normal(rng);
  }
  return State::vector(std::move(next));
}

GridIndexer::GridIndexer(int state_dim, double limit, double width)
    : state_dim_(state_dim), limit_(limit), width_(width) {
  cells_ = static_cast<int>(std::ceil(2.0 * limit / width));
  total_ = 1;
  for (int k = 0; k < state_dim; ++k) total_ *= cells_;
}

int GridIndexer::row(const State& s) const {
  int out = 0;
  for (int k = state_dim_ - 1; k >= 0; --k) {
    const int c = std::clamp(static_cast<int>(std::floor((s.x[k] + limit_) / width_)), 0, cells_ - 1);
    out = out * cells_ + c;
  }
  return out;
}

std::vector<double> GridIndexer::row_center(int row) const {
  std::vector<double> x(state_dim_);
  for (int k = 0; k < state_dim_; ++k) {
    x[k] = center(row % cells_);
    row /= cells_;
  }
  return x;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Probabilities of the Gaussian N(mean, sigma^2) over grid cells; the outer cells absorb the tails.
// Returns (first cell, probabilities) restricted to a +-6 sigma window.
std::pair<int, std::vector<double>> cell_probs(const GridIndexer& grid, double mean, double sigma) {
  const int n = grid.cells_per_dim();
  const double w = grid.edge(1) - grid.edge(0);
  const int lo = std::clamp(static_cast<int>(std::floor((mean - 6 * sigma - grid.edge(0)) / w)), 0, n - 1);
  const int hi = std::clamp(static_cast<int>(std::floor((mean + 6 * sigma - grid.edge(0)) / w)), 0, n - 1);
  std::vector<double> p(hi - lo + 1);
  double total = 0.0;
  for (int c = lo; c <= hi; ++c) {
    const double left = c == 0 ? 0.0 : normal_cdf((grid.edge(c) - mean) / sigma);
    const double right = c == n - 1 ? 1.0 : normal_cdf((grid.edge(c + 1) - mean) / sigma);
    p[c - lo] = std::max(0.0, right - left);
    total += p[c - lo];
  }
  for (auto& v : p) v /= total;
  return {lo, std::move(p)};
}

}  // namespace

ValueTables plan_knr(const KnrMdp& env, const std::vector<double>& op, const GridIndexer& grid) {
  const int ds = env.state_dim();
  if (ds > 2) throw Error(ErrorCode::PlanningUnavailable, "discretized planning supports state_dim <= 2");
  const int H = env.horizon();
  const int A = env.num_actions();
  const int rows = grid.rows();
  const int n = grid.cells_per_dim();
  const auto& features = env.features();
  const std::size_t dphi = features.phi_dim();
  ValueTables t = ValueTables::zeros(H, rows, A);

  // Transition windows are the same at every step.
  struct Window {
    std::vector<std::pair<int, std::vector<double>>> dims;
  };
  std::vector<Window> windows(static_cast<std::size_t>(rows) * A);
  std::vector<double> rewards(rows);
  for (int r = 0; r < rows; ++r) {
    const State s = State::vector(grid.row_center(r));
    rewards[r] = env.state_reward(s.x);
    for (int a = 0; a < A; ++a) {
      const auto phi = features.phi(0, s, a);
      auto& win = windows[static_cast<std::size_t>(r) * A + a];
      for (int k = 0; k < ds; ++k) {
        double mean = 0.0;
        for (std::size_t j = 0; j < dphi; ++j) mean += op[k * dphi + j] * phi[j];
        win.dims.push_back(cell_probs(grid, mean, env.sigma()));
      }
    }
  }
  for (int h = H - 1; h >= 0; --h) {
    for (int r = 0; r < rows; ++r) {
      for (int a = 0; a < A; ++a) {
        double next = 0.0;
        if (h + 1 < H) {
          const auto& win = windows[static_cast<std::size_t>(r) * A + a];
          const auto& [lo0, p0] = win.dims[0];
          if (ds == 1) {
            for (std::size_t i = 0; i < p0.size(); ++i) next += p0[i] * t.v_at(h + 1, lo0 + static_cast<int>(i));
          } else {
            const auto& [lo1, p1] = win.dims[1];
            for (std::size_t j = 0; j < p1.size(); ++j) {
              double inner = 0.0;
              const int base = (lo1 + static_cast<int>(j)) * n;
              for (std::size_t i = 0; i < p0.size(); ++i) inner += p0[i] * t.v_at(h + 1, base + lo0 + static_cast<int>(i));
              next += p1[j] * inner;
            }
          }
        }
        t.q_at(h, r, a) = rewards[r] + next;
      }
      double best = t.q_at(h, r, 0);
      for (int a = 1; a < A; ++a) best = std::max(best, t.q_at(h, r, a));
      t.v_at(h, r) = best;
    }
  }
  return t;
}

InstanceBundle make_knr(int d_s, int d_phi, double sigma, int H, int action_count, std::uint64_t seed,
                        int grid_radius, double grid_step) {
  if (d_s < 1 || d_phi < 1 || !(sigma > 0.0) || H < 1 || action_count < 1) {
    throw Error(ErrorCode::ConfigError, "knr needs positive dimensions, horizon and noise");
  }
  if (d_s > 2) throw Error(ErrorCode::PlanningUnavailable, "knr classes are planned on a grid; state_dim <= 2");
  Rng rng = make_rng(seed, 0, "env-knr");
  const std::size_t entries = static_cast<std::size_t>(d_s) * d_phi;
  std::vector<double> omega(static_cast<std::size_t>(d_phi) * d_s);
  for (auto& w : omega) w = 1.5 * standard_normal(rng);
  std::vector<double> offsets(static_cast<std::size_t>(d_phi) * action_count);
  for (auto& o : offsets) o = 2.0 * std::numbers::pi * uniform01(rng);
  auto features = std::make_shared<const RandomFourierFeatures>(d_s, d_phi, action_count, omega, offsets);
  std::vector<double> truth(entries);
  for (auto& u : truth) u = grid_step * (uniform_int(rng, 13) - 6);
  std::vector<double> goal(d_s);
  for (auto& g : goal) g = uniform01(rng) - 0.5;
  auto env = std::make_shared<const KnrMdp>(features, truth, sigma, H, action_count, goal);

  // Class: every operator within grid_radius steps of the truth per entry, lexicographic.
  const int per_entry = 2 * grid_radius + 1;
  double members = 1.0;
  for (std::size_t e = 0; e < entries; ++e) members *= per_entry;
  if (members > 4096) throw Error(ErrorCode::BudgetExceeded, "knr class would exceed 4096 members");
  const int count = static_cast<int>(members);

  double max_op = 0.0;
  std::vector<std::vector<double>> ops(count, truth);
  for (int i = 0; i < count; ++i) {
    int code = i;
    for (std::size_t e = 0; e < entries; ++e) {
      ops[i][e] += grid_step * (code % per_entry - grid_radius);
      code /= per_entry;
    }
    double row_max = 0.0;
    for (int k = 0; k < d_s; ++k) {
      double acc = 0.0;
      for (int j = 0; j < d_phi; ++j) acc += std::abs(ops[i][static_cast<std::size_t>(k) * d_phi + j]);
      row_max = std::max(row_max, acc);
    }
    max_op = std::max(max_op, row_max);
  }
  const double limit = max_op + 4.0 * sigma;
  auto grid = std::make_shared<const GridIndexer>(d_s, limit, sigma / 4.0);

  HypothesisClass cls;
  int truth_index = 0;
  for (int i = 0; i < count; ++i) {
    Payload p;
    p.model = ops[i];
    ValueTables t = plan_knr(*env, ops[i], *grid);
    cls.members.emplace_back(i, HypothesisKind::model_backed, std::move(t), std::move(p), grid);
    if (ops[i] == truth) truth_index = i;
  }
  cls.truth_index = truth_index;

  InstanceBundle b;
  b.mdp = env;
  const double v_star = cls.members[truth_index].v_value(0, env->initial_state());
  b.cls = std::make_shared<const HypothesisClass>(std::move(cls));
  auto spec = std::make_shared<BilinearSpec>();
  spec->family = Family::knr;
  spec->horizon = H;
  spec->num_actions = action_count;
  spec->features = features;
  spec->noise_sigma = sigma;
  spec->state_dim = d_s;
  const double spread = 2.0 * max_op * std::sqrt(static_cast<double>(d_phi)) + 5.0 * sigma;
  spec->loss_bound = d_s * spread * spread;
  spec->xi = Transform::square_root(H / sigma);
  b.spec = spec;

  BilinearWitness wit;
  wit.w = [truth, d_s, d_phi](int, const Hypothesis& g) {
    const auto& u = g.payload().model;
    std::vector<double> out(static_cast<std::size_t>(d_phi) * d_phi, 0.0);
    for (int i = 0; i < d_phi; ++i) {
      for (int j = 0; j < d_phi; ++j) {
        double acc = 0.0;
        for (int k = 0; k < d_s; ++k) {
          const std::size_t r = static_cast<std::size_t>(k) * d_phi;
          acc += (u[r + i] - truth[r + i]) * (u[r + j] - truth[r + j]);
        }
        out[static_cast<std::size_t>(i) * d_phi + j] = acc;
      }
    }
    return out;
  };
  // Second moment of phi under the roll-in, estimated by simulation with a fixed stream per (h, member).
  wit.x = memoize([env, features, d_phi, seed](int h, const Hypothesis& f) {
    constexpr int kSamples = 20000;
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(h) * 1000003ULL + f.id(), "knr-witness");
    const GreedyPolicy pi(f);
    std::vector<double> out(static_cast<std::size_t>(d_phi) * d_phi, 0.0);
    for (int n = 0; n < kSamples; ++n) {
      State s = env->initial_state();
      for (int k = 0; k < h; ++k) s = env->transition(k, s, pi.act(k, s, rng), rng);
      const auto phi = features->phi(h, s, pi.act(h, s, rng));
      for (int i = 0; i < d_phi; ++i) {
        for (int j = 0; j < d_phi; ++j) out[static_cast<std::size_t>(i) * d_phi + j] += phi[i] * phi[j];
      }
    }
    for (auto& v : out) v /= kSamples;
    return out;
  });
  b.witness = std::move(wit);
  b.meta.generator = "knr";
  b.meta.params = {{"d_s", d_s},   {"d_phi", d_phi}, {"sigma", sigma},           {"H", H},
                   {"A", action_count}, {"radius", grid_radius}, {"step", grid_step}};
  b.meta.seed = seed;
  b.meta.v_star = v_star;
  fill_witness_bounds(b);
  return b;
}

}  // namespace bilin
