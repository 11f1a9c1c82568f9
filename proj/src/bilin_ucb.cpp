#include "bilin/bilin_ucb.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>

#include "bilin/error.hpp"

namespace bilin {

VersionSpace::VersionSpace(int horizon, std::size_t class_size, State initial_state)
    : horizon_(horizon),
      class_size_(class_size),
      initial_state_(std::move(initial_state)),
      cumulative_(static_cast<std::size_t>(horizon) * class_size, 0.0) {}

void VersionSpace::add(int member, std::vector<std::vector<double>> losses, std::vector<Dataset> datasets) {
  if (losses.size() != static_cast<std::size_t>(horizon_)) {
    throw Error(ErrorCode::DimensionMismatch, "loss matrix needs one row per step");
  }
  for (int h = 0; h < horizon_; ++h) {
    if (losses[h].size() != class_size_) throw Error(ErrorCode::DimensionMismatch, "loss row has wrong length");
    for (std::size_t g = 0; g < class_size_; ++g) {
      cumulative_[static_cast<std::size_t>(h) * class_size_ + g] += losses[h][g] * losses[h][g];
    }
  }
  history_.push_back(std::move(losses));
  if (!datasets.empty()) datasets_.push_back(std::move(datasets));
  chosen_.push_back(member);
}

double VersionSpace::max_cumulative(std::size_t g) const {
  double m = 0.0;
  for (int h = 0; h < horizon_; ++h) m = std::max(m, cumulative(h, g));
  return m;
}

bool VersionSpace::feasible(std::size_t g, double radius) const {
  if (std::isinf(radius)) return true;
  const double r2 = radius * radius;
  for (int h = 0; h < horizon_; ++h) {
    if (cumulative(h, g) > r2) return false;
  }
  return true;
}

const Hypothesis& solve_constrained_argmax(const HypothesisClass& cls, const VersionSpace& state, double radius) {
  const Hypothesis* best = nullptr;
  double best_value = 0.0;
  for (std::size_t g = 0; g < cls.size(); ++g) {
    if (!state.feasible(g, radius)) continue;
    const Hypothesis& cand = cls[g];
    const double v = cand.v_value(0, state.initial_state());
    if (best == nullptr || v > best_value) {
      best = &cand;
      best_value = v;
    }
  }
  if (best == nullptr) throw InfeasibleError(state.iterations(), radius);
  return *best;
}

std::size_t feasible_count(const HypothesisClass& cls, const VersionSpace& state, double radius) {
  std::size_t n = 0;
  for (std::size_t g = 0; g < cls.size(); ++g) n += state.feasible(g, radius) ? 1 : 0;
  return n;
}

std::vector<Dataset> collect_batch(const EpisodicMdp& mdp, const Hypothesis& f, const BilinearSpec& spec, int m,
                                   Rng& rng) {
  if (m < 1) throw Error(ErrorCode::ConfigError, "batch size m must be positive");
  const int H = mdp.horizon();
  std::vector<Dataset> data(H);
  for (int h = 0; h < H; ++h) {
    data[h].step = h;
    data[h].observations.reserve(m);
  }
  const GreedyPolicy rollin(f);
  if (spec.estimation == EstimationRule::on_policy) {
    for (int i = 0; i < m; ++i) {
      Trajectory traj = sample_episode(mdp, rollin, rng);
      for (int h = 0; h < H; ++h) data[h].observations.push_back(std::move(traj.steps[h]));
    }
    return data;
  }
  const auto est = estimation_policy(spec, f);
  for (int h = 0; h < H; ++h) {
    for (int i = 0; i < m; ++i) data[h].observations.push_back(rollin_then_estimate(mdp, rollin, *est, h, rng));
  }
  return data;
}

std::size_t batch_trajectories(const BilinearSpec& spec, int m) {
  return spec.estimation == EstimationRule::on_policy ? static_cast<std::size_t>(m)
                                                      : static_cast<std::size_t>(m) * spec.horizon;
}

double eps_gen_finite(double m, double class_size, int horizon) {
  return 2.0 * std::numbers::sqrt2 * horizon * std::sqrt((1.0 + std::log(class_size)) / m);
}

double conf_finite(double delta) { return std::sqrt(std::log(1.0 / delta)); }

double eps_gen_witness(double m, double log_class_size, double log_discriminators, int num_actions) {
  const double l = std::log(2.0) + log_class_size + log_discriminators;
  return std::sqrt(2.0 * num_actions * l / m) + 2.0 * num_actions * l / (3.0 * m);
}

double conf_witness(double delta) { return std::log(1.0 / delta); }

double eps_gen_hoeffding(double m, double log_count, double loss_bound) {
  return std::numbers::sqrt2 * loss_bound * std::sqrt((1.0 + log_count) / m);
}

TheoryParams set_parameters_from(int d, double b_x, double b_w, double eps_gen,
                                 const std::function<double(double)>& conf, double delta, int horizon) {
  if (d < 1 || !(b_x > 0.0) || !(b_w > 0.0) || !(eps_gen > 0.0) || horizon < 1) {
    throw Error(ErrorCode::ConfigError, "set_parameters needs positive d, B_X, B_W, eps_gen, H");
  }
  if (!(delta > 0.0) || !(delta < 1.0 / 3.0)) throw Error(ErrorCode::ConfigError, "delta must lie in (0, 1/3)");
  TheoryParams p;
  p.eps_gen = eps_gen;
  const double ratio = 3.0 * b_x * b_x * b_w * b_w / (eps_gen * eps_gen);
  p.iterations_per_step = static_cast<int>(std::ceil(3.0 * d * std::log1p(ratio)));
  p.T = horizon * p.iterations_per_step;
  p.conf = conf(delta / (static_cast<double>(p.T) * horizon));
  p.R = std::sqrt(static_cast<double>(p.T)) * eps_gen * p.conf;
  return p;
}

TheoryParams set_parameters(int d, double b_x, double b_w, double m, double delta, double class_size, int horizon) {
  return set_parameters_from(d, b_x, b_w, eps_gen_finite(m, class_size, horizon), conf_finite, delta, horizon);
}

bool RunResult::truth_always_feasible() const {
  for (const auto& it : iterations) {
    if (it.truth_slack && *it.truth_slack < 0.0) return false;
  }
  return true;
}

namespace {

RunResult run_loop(const EpisodicMdp& mdp, const HypothesisClass& cls, const BilinearSpec& spec,
                   const UcbParams& params) {
  if (params.T < 1 || params.m < 1 || params.n_eval < 1) throw Error(ErrorCode::ConfigError, "T, m, n_eval must be >= 1");
  if (cls.size() == 0) throw Error(ErrorCode::ConfigError, "empty hypothesis class");
  if (!(params.R >= 0.0)) throw Error(ErrorCode::ConfigError, "R must be non-negative");
  const auto start = std::chrono::steady_clock::now();
  const int H = mdp.horizon();
  Rng data_rng = make_rng(params.seed, 0, "collect");
  Rng eval_rng = make_rng(params.seed, 0, "eval");
  Rng check_rng = make_rng(params.seed, 0, "spot-check");
  VersionSpace state(H, cls.size(), mdp.initial_state());
  RunResult result;
  double radius = params.R;
  const State s0 = mdp.initial_state();

  for (int t = 0; t < params.T; ++t) {
    const Hypothesis* chosen = nullptr;
    while (chosen == nullptr) {
      try {
        chosen = &solve_constrained_argmax(cls, state, radius);
      } catch (const InfeasibleError&) {
        if (!params.auto_relax || radius == 0.0) throw;
        radius *= 2.0;
        ++result.relaxations;
        std::clog << "bilin: infeasible program at iteration " << t << ", relaxing R to " << radius << "\n";
      }
    }
    IterationRecord rec;
    rec.t = t;
    rec.member = chosen->id();
    rec.optimistic_value = chosen->v_value(0, s0);
    rec.feasible_count = feasible_count(cls, state, radius);
    rec.radius = radius;
    if (cls.truth_index) {
      const double r2 = std::isinf(radius) ? std::numeric_limits<double>::infinity() : radius * radius;
      rec.truth_slack = r2 - state.max_cumulative(static_cast<std::size_t>(*cls.truth_index));
    }

    auto datasets = collect_batch(mdp, *chosen, spec, params.m, data_rng);
    result.trajectories += batch_trajectories(spec, params.m);
    std::vector<std::vector<double>> losses(H);
    for (int h = 0; h < H; ++h) losses[h] = batch_losses(datasets[h], *chosen, cls, spec);
    if (params.spot_check_every > 0 && t % params.spot_check_every == 0) {
      const int h = uniform_int(check_rng, H);
      const std::size_t g = static_cast<std::size_t>(uniform_int(check_rng, static_cast<int>(cls.size())));
      const double ref = empirical_loss(datasets[h], *chosen, cls[g], spec);
      if (std::abs(ref - losses[h][g]) > 1e-9 * std::max(1.0, std::abs(ref))) {
        throw Error(ErrorCode::DimensionMismatch, "cached loss disagrees with empirical_loss recomputation");
      }
    }
    state.add(chosen->id(), std::move(losses), params.keep_datasets ? std::move(datasets) : std::vector<Dataset>{});

    const GreedyPolicy policy(*chosen);
    const McEstimate mc = monte_carlo_value(mdp, policy, params.n_eval, eval_rng);
    result.eval_trajectories += params.n_eval;
    rec.mc_mean = mc.mean;
    rec.mc_half_width = mc.half_width;
    result.iterations.push_back(rec);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.iterations.size(); ++i) {
    if (result.iterations[i].mc_mean > result.iterations[best].mc_mean) best = i;
  }
  result.chosen_iteration = static_cast<int>(best);
  result.chosen_member = result.iterations[best].member;
  result.chosen_value = result.iterations[best].mc_mean;
  result.chosen_half_width = result.iterations[best].mc_half_width;
  result.final_member = result.iterations.back().member;
  result.final_radius = radius;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

RunResult run(const EpisodicMdp& mdp, const HypothesisClass& cls, const BilinearSpec& spec, const UcbParams& params) {
  if (spec.generalized()) {
    throw Error(ErrorCode::ConfigError, "spec has a discriminator class; use run_generalized");
  }
  return run_loop(mdp, cls, spec, params);
}

RunResult run_generalized(const EpisodicMdp& mdp, const HypothesisClass& cls, const BilinearSpec& spec,
                          const UcbParams& params) {
  return run_loop(mdp, cls, spec, params);
}

}  // namespace bilin
