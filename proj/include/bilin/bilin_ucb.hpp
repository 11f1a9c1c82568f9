#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "bilin/bilinear.hpp"
#include "bilin/hypothesis.hpp"
#include "bilin/mdp.hpp"

namespace bilin {

// Cumulative squared empirical losses of every member, one constraint per step h.
class VersionSpace {
 public:
  VersionSpace(int horizon, std::size_t class_size, State initial_state);

  int iterations() const noexcept { return static_cast<int>(chosen_.size()); }
  int horizon() const noexcept { return horizon_; }
  std::size_t class_size() const noexcept { return class_size_; }
  const State& initial_state() const noexcept { return initial_state_; }

  // losses[h][g] = L_{D_{t;h}, f_t}(g).
  void add(int member, std::vector<std::vector<double>> losses, std::vector<Dataset> datasets = {});

  double cumulative(int h, std::size_t g) const { return cumulative_[static_cast<std::size_t>(h) * class_size_ + g]; }
  double max_cumulative(std::size_t g) const;
  bool feasible(std::size_t g, double radius) const;
  double loss(int i, int h, std::size_t g) const { return history_[i][h][g]; }
  const std::vector<int>& chosen() const noexcept { return chosen_; }
  const std::vector<std::vector<Dataset>>& datasets() const noexcept { return datasets_; }

 private:
  int horizon_;
  std::size_t class_size_;
  State initial_state_;
  std::vector<double> cumulative_;
  std::vector<std::vector<std::vector<double>>> history_;
  std::vector<std::vector<Dataset>> datasets_;
  std::vector<int> chosen_;
};

// Feasible member with the largest claimed initial value; ties to the lowest id.
const Hypothesis& solve_constrained_argmax(const HypothesisClass& cls, const VersionSpace& state, double radius);
std::size_t feasible_count(const HypothesisClass& cls, const VersionSpace& state, double radius);

// One dataset per step. On-policy: m episodes sliced by step. Uniform: m roll-ins per step.
std::vector<Dataset> collect_batch(const EpisodicMdp& mdp, const Hypothesis& f, const BilinearSpec& spec, int m,
                                   Rng& rng);
std::size_t batch_trajectories(const BilinearSpec& spec, int m);

// Generalization error for finite classes with losses in [-2H, 2H]; companion conf(d) = sqrt(ln(1/d)).
double eps_gen_finite(double m, double class_size, int horizon);
double conf_finite(double delta);
// Bernstein-style bound for witness-rank losses; companion conf(d) = ln(1/d).
double eps_gen_witness(double m, double log_class_size, double log_discriminators, int num_actions);
double conf_witness(double delta);
// Union-bounded Azuma-Hoeffding for losses in [-B, B] over log_count functions; conf as conf_finite.
double eps_gen_hoeffding(double m, double log_count, double loss_bound);

struct TheoryParams {
  int T = 0;
  double R = 0.0;
  double eps_gen = 0.0;
  double conf = 0.0;
  int iterations_per_step = 0;
};

TheoryParams set_parameters(int d, double b_x, double b_w, double m, double delta, double class_size, int horizon);
TheoryParams set_parameters_from(int d, double b_x, double b_w, double eps_gen,
                                 const std::function<double(double)>& conf, double delta, int horizon);

struct UcbParams {
  int T = 1;
  double R = std::numeric_limits<double>::infinity();
  int m = 1;
  std::size_t n_eval = 2000;
  std::uint64_t seed = 0;
  bool auto_relax = false;
  bool keep_datasets = false;
  // Recompute one cached loss by the reference path every k iterations (0 = off).
  int spot_check_every = 0;
};

struct IterationRecord {
  int t = 0;
  int member = 0;
  double optimistic_value = 0.0;
  double mc_mean = 0.0;
  double mc_half_width = 0.0;
  std::size_t feasible_count = 0;
  double radius = 0.0;
  std::optional<double> truth_slack;  // R^2 - max_h cumulative loss of the truth member
};

struct RunResult {
  int chosen_iteration = 0;
  int chosen_member = 0;
  double chosen_value = 0.0;
  double chosen_half_width = 0.0;
  int final_member = 0;
  std::vector<IterationRecord> iterations;
  std::size_t trajectories = 0;
  std::size_t eval_trajectories = 0;
  double wall_seconds = 0.0;
  double final_radius = 0.0;
  int relaxations = 0;

  bool truth_always_feasible() const;
};

// Plain bilinear classes only; generalized specs go through run_generalized.
RunResult run(const EpisodicMdp& mdp, const HypothesisClass& cls, const BilinearSpec& spec, const UcbParams& params);
RunResult run_generalized(const EpisodicMdp& mdp, const HypothesisClass& cls, const BilinearSpec& spec,
                          const UcbParams& params);

}  // namespace bilin
