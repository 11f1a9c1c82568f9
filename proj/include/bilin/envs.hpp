#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bilin/bilinear.hpp"
#include "bilin/features.hpp"
#include "bilin/hypothesis.hpp"
#include "bilin/mdp.hpp"

namespace bilin {

struct InstanceMetadata {
  std::string generator;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
  int witness_dim = 0;
  double b_x = 0.0;
  double b_w = 0.0;
  std::optional<int> occupancy_rank;
  // V*(s0): exact for tabular instances, discretized-planner value otherwise.
  double v_star = 0.0;

  // "generator key=value ..." with every parameter, enough to regenerate the bundle.
  std::string descriptor() const;
};

struct InstanceBundle {
  std::shared_ptr<const EpisodicMdp> mdp;
  std::shared_ptr<const HypothesisClass> cls;
  std::shared_ptr<const BilinearSpec> spec;
  std::optional<BilinearWitness> witness;
  InstanceMetadata meta;
  // Exact Bellman backup theta_{h+1} -> T_h(theta_{h+1}) (linear Bellman-complete families).
  std::function<std::vector<double>(int h, const std::vector<double>& next)> backup;
};

// Random tabular MDP: Dirichlet(1) rows over `support` random successors, rewards uniform in [lo, hi].
TabularMdp random_tabular_mdp(int S, int A, int H, Rng& rng, int support = 0, double reward_lo = 0.0,
                              double reward_hi = 1.0, bool time_homogeneous = false);

InstanceBundle make_q_rank(int S, int A, int H, int class_size, std::uint64_t seed);
InstanceBundle make_v_rank(int S, int A, int H, int class_size, std::uint64_t seed);
// Linear-MDP kernel of rank d with the q_rank discrepancy; occupancy rank certified by enumeration.
InstanceBundle make_low_occupancy(int S, int A, int H, int d, int class_size, std::uint64_t seed,
                                  bool uniform_estimation = false);

InstanceBundle make_tabular_mixture(int S, int A, int H, int num_base_models, double grid, std::uint64_t seed,
                                    bool identical_bases = false);

InstanceBundle make_linear_qv(std::shared_ptr<const TabularMdp> mdp, const std::vector<int>& cluster_of,
                              std::uint64_t seed, std::size_t class_size = 12, double grid = 0.1);
// Base MDP plus `duplicates` copies of states with identical rows, merged by the aggregation.
InstanceBundle make_linear_qv_random(int base_states, int duplicates, int A, int H, std::uint64_t seed,
                                     std::size_t class_size = 12);

InstanceBundle make_bellman_complete(int S, int A, int H, int d, std::uint64_t seed, int class_size = 12);
InstanceBundle make_glm(int S, int A, int H, int class_size, std::uint64_t seed);

InstanceBundle make_knr(int d_s, int d_phi, double sigma, int H, int action_count, std::uint64_t seed,
                        int grid_radius = 2, double grid_step = 0.1);

InstanceBundle make_witness(int S, int A, int H, int class_size, std::uint64_t seed);

// Empty `parent_sets` means each factor depends on itself only.
InstanceBundle make_factored(int d, int O_size, std::vector<std::vector<int>> parent_sets, int A, int H,
                             std::uint64_t seed, int candidates_per_factor = 4);

InstanceBundle make_binary_tree(int H, int special_leaf, int special_action, std::uint64_t seed);

// Vector-state environment s' = U phi(s,a) + N(0, sigma^2 I) with a clipped quadratic reward.
class KnrMdp final : public EpisodicMdp {
 public:
  KnrMdp(std::shared_ptr<const RandomFourierFeatures> features, std::vector<double> op, double sigma, int horizon,
         int num_actions, std::vector<double> goal);

  int horizon() const override { return horizon_; }
  int num_actions() const override { return num_actions_; }
  State initial_state() const override { return State::vector(std::vector<double>(state_dim_, 0.0)); }
  bool is_tabular() const override { return false; }
  int state_dim() const override { return state_dim_; }

  double reward(int h, const State& s, int a, Rng& rng) const override;
  State transition(int h, const State& s, int a, Rng& rng) const override;
  double expected_reward(int h, const State& s, int a) const override;

  double state_reward(const std::vector<double>& x) const;
  const std::vector<double>& op() const { return op_; }
  double sigma() const { return sigma_; }
  const RandomFourierFeatures& features() const { return *features_; }

 private:
  std::shared_ptr<const RandomFourierFeatures> features_;
  std::vector<double> op_;
  double sigma_;
  int horizon_;
  int num_actions_;
  int state_dim_;
  std::vector<double> goal_;
};

// Uniform grid over [-limit, limit]^d used to plan in vector-state models.
class GridIndexer final : public StateIndexer {
 public:
  GridIndexer(int state_dim, double limit, double width);
  int row(const State& s) const override;
  int rows() const override { return total_; }
  int cells_per_dim() const { return cells_; }
  double center(int cell) const { return -limit_ + (cell + 0.5) * width_; }
  double edge(int cell) const { return -limit_ + cell * width_; }
  std::vector<double> row_center(int row) const;

 private:
  int state_dim_;
  double limit_;
  double width_;
  int cells_;
  int total_;
};

// Discretized dynamic programming for a candidate operator; PlanningUnavailable when d_s > 2.
ValueTables plan_knr(const KnrMdp& env, const std::vector<double>& op, const GridIndexer& grid);

// Generator lookup by name with key=value parameters (missing keys take defaults).
InstanceBundle make_bundle(const std::string& generator, const std::map<std::string, double>& params);
std::vector<std::string> generator_names();

}  // namespace bilin
