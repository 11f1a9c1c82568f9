#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "bilin/envs.hpp"

namespace bilin::envs_detail {

std::vector<double> dirichlet(Rng& rng, int n);

// Roll-in distribution at step h over (s, a): greedy roll-in to h, then the estimation rule.
std::vector<double> rollin_distribution(const EpisodicMdp& mdp, const Hypothesis& f, int h, EstimationRule rule);
std::vector<double> state_distribution(const EpisodicMdp& mdp, const Hypothesis& f, int h);

// Q_g(h,s,a) - r(h,s,a) - E[V_g(h+1, s')] under the true model.
double bellman_residual(const EpisodicMdp& mdp, const Hypothesis& g, int h, int s, int a);

ValueTables q_tables(const ValueTables& q_source);

// Truth plus randomly perturbed Q tables on reachable entries, values kept inside [0, H].
HypothesisClass q_perturbation_class(const EpisodicMdp& mdp, int class_size, Rng& rng, double step = 0.1);

// max over steps of the rank of the matrix of member roll-in distributions.
int occupancy_rank(const EpisodicMdp& mdp, const HypothesisClass& cls, EstimationRule rule);

// Fills witness_dim, b_w and b_x by evaluating the witness maps on the whole class.
void fill_witness_bounds(InstanceBundle& bundle);

// Caches X_h(f) by (h, member id); used where X is estimated by simulation.
std::function<std::vector<double>(int, const Hypothesis&)> memoize(
    std::function<std::vector<double>(int, const Hypothesis&)> fn);

double exact_v_star(const EpisodicMdp& mdp);

}  // namespace bilin::envs_detail
