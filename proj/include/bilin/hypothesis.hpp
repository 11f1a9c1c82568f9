#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bilin/mdp.hpp"

namespace bilin {

enum class HypothesisKind { value_pair, q_only, model_backed };

const char* to_string(HypothesisKind kind) noexcept;
HypothesisKind parse_hypothesis_kind(const std::string& name);

// Maps a state to a table row; tabular hypotheses use the state id directly.
class StateIndexer {
 public:
  virtual ~StateIndexer() = default;
  virtual int row(const State& s) const = 0;
  virtual int rows() const = 0;
};

// Defining parameters of a hypothesis; which fields are used depends on the family.
struct Payload {
  std::vector<std::vector<double>> w;      // per-step weights on phi(s,a)
  std::vector<std::vector<double>> theta;  // per-step weights on psi, or mixture weights
  std::vector<double> model;               // flattened model parameters (operator U, factor tables)
  std::shared_ptr<const TabularKernel> kernel;  // candidate kernel for tabular model-backed members
};

class Hypothesis {
 public:
  // For q_only and model_backed kinds the V layer is recomputed as max_a Q.
  Hypothesis(int id, HypothesisKind kind, ValueTables tables, Payload payload = {},
             std::shared_ptr<const StateIndexer> indexer = nullptr);

  int id() const noexcept { return id_; }
  HypothesisKind kind() const noexcept { return kind_; }
  const Payload& payload() const noexcept { return payload_; }
  const ValueTables& tables() const noexcept { return tables_; }
  const std::shared_ptr<const StateIndexer>& indexer() const noexcept { return indexer_; }
  int horizon() const noexcept { return tables_.horizon; }
  int num_actions() const noexcept { return tables_.actions; }

  int row(const State& s) const { return indexer_ ? indexer_->row(s) : s.id; }
  double q_value(int h, const State& s, int a) const { return tables_.q_at(h, row(s), a); }
  // V at step H is zero.
  double v_value(int h, const State& s) const { return tables_.v_at(h, row(s)); }
  int greedy_action(int h, const State& s) const { return greedy_row(h, row(s)); }
  int greedy_row(int h, int r) const { return greedy_[static_cast<std::size_t>(h) * tables_.rows + r]; }

  Hypothesis relabeled(int id) const;

 private:
  int id_;
  HypothesisKind kind_;
  ValueTables tables_;
  Payload payload_;
  std::shared_ptr<const StateIndexer> indexer_;
  std::vector<int> greedy_;
};

struct HypothesisClass {
  std::vector<Hypothesis> members;
  std::optional<int> truth_index;

  std::size_t size() const noexcept { return members.size(); }
  const Hypothesis& operator[](std::size_t i) const { return members[i]; }
  const Hypothesis& truth() const;
};

// Greedy policy of a hypothesis with ties to the lowest action index.
class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(const Hypothesis& f) : f_(&f) {}
  int act(int h, const State& s, Rng&) const override { return f_->greedy_action(h, s); }
  double prob(int h, const State& s, int a) const override { return f_->greedy_action(h, s) == a ? 1.0 : 0.0; }

 private:
  const Hypothesis* f_;
};

GreedyPolicy greedy_policy(const Hypothesis& f);

// Throws NotEnumerable on vector-state instances.
bool check_greedy_consistency(const Hypothesis& f, const EpisodicMdp& mdp, double tol = 1e-9);

// Sampled check for vector-state hypotheses.
bool spot_check_greedy_consistency(const Hypothesis& f, const std::function<State(Rng&)>& sampler, Rng& rng,
                                   std::size_t samples = 10000, double tol = 1e-9);

// Backward dynamic programming under a candidate tabular model.
ValueTables model_to_values(const TabularKernel& model);

// Truth member equals Q*, V* on every reachable (h, s) and all actions.
bool check_realizability(const HypothesisClass& cls, const EpisodicMdp& mdp, double tol = 1e-9);

bool is_q_star_irrelevant(const EpisodicMdp& mdp, const std::vector<int>& cluster_of, double tol = 1e-9);

struct AggregationOptions {
  double grid_step = 0.1;
  std::size_t max_members = 12;
  std::uint64_t seed = 0;
};

// Linear Q*/V* class over one-hot cluster x action (and cluster) features; the
// truth candidate is built from cluster representatives.
HypothesisClass build_aggregation_class(const EpisodicMdp& mdp, const std::vector<int>& cluster_of,
                                        const AggregationOptions& options = {});

}  // namespace bilin
