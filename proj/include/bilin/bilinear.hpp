#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bilin/features.hpp"
#include "bilin/hypothesis.hpp"
#include "bilin/mdp.hpp"

namespace bilin {

enum class Family {
  q_rank,
  v_rank,
  mixture,
  linear_qv,
  bellman_complete,
  low_occupancy,
  knr,
  glm_complete,
  witness,
  factored,
};

const char* to_string(Family family) noexcept;
Family parse_family(const std::string& name);

enum class EstimationRule { on_policy, uniform };

const char* to_string(EstimationRule rule) noexcept;

// Monotone transform: identity, x -> scale*x, or x -> scale*sqrt(x).
struct Transform {
  enum class Kind { identity, linear, sqrt };
  Kind kind = Kind::identity;
  double scale = 1.0;

  static Transform identity() { return {}; }
  static Transform linear(double scale) { return {Kind::linear, scale}; }
  static Transform square_root(double scale) { return {Kind::sqrt, scale}; }

  double operator()(double x) const;
};

// Test function over transitions. Witness families index values by (s, a, s');
// the generalized-linear family by (s, a).
struct Discriminator {
  std::vector<double> values;
};

struct BilinearSpec {
  Family family = Family::q_rank;
  EstimationRule estimation = EstimationRule::on_policy;
  int horizon = 0;
  int num_actions = 0;
  int num_states = 0;  // 0 for vector-state instances
  double loss_bound = 0.0;
  Transform xi;
  Transform zeta;
  double beta = 1.0;

  std::shared_ptr<const FeatureMap> features;
  std::shared_ptr<const MixtureBasis> mixture;
  std::shared_ptr<const FactorStructure> factors;

  double noise_sigma = 0.0;  // knr
  int state_dim = 0;         // knr
  double link_scale = 0.0;   // glm: sigma(x) = link_scale * logistic(x)
  double slope_lower = 0.0;  // glm: a
  double slope_upper = 0.0;  // glm: b

  // Per-step explicit discriminators; empty for plain bilinear classes.
  std::vector<std::vector<Discriminator>> discriminators;
  bool importance_weighted = true;  // witness: weight A * 1{a = pi_g(s)}

  bool generalized() const;
  std::size_t num_discriminators(int h) const;
  // Explicit table of the nu-th discriminator at step h.
  Discriminator discriminator(int h, std::size_t nu) const;

  // Loss of hypothesis g on one observation collected under roll-in f.
  double discrepancy(const Hypothesis& f, const Observation& o, const Hypothesis& g,
                     std::optional<std::size_t> nu = std::nullopt) const;

  // Count of discrepancy values clipped at the loss bound (knr tail truncation).
  std::shared_ptr<std::atomic<std::size_t>> truncations = std::make_shared<std::atomic<std::size_t>>(0);
};

double discrepancy_q_rank(const Observation& o, const Hypothesis& g);
double discrepancy_v_rank(const Observation& o, const Hypothesis& g, int num_actions);
double discrepancy_mixture(const Hypothesis& f, const Observation& o, const Hypothesis& g, const MixtureBasis& basis);
double discrepancy_linear_qv(const Observation& o, const Hypothesis& g, const FeatureMap& features, int horizon);
double discrepancy_bellman_complete(const Observation& o, const Hypothesis& g, const FeatureMap& features,
                                    int horizon, int num_actions);
double discrepancy_knr(const Observation& o, const Hypothesis& g, const FeatureMap& features, double noise_variance,
                       int state_dim);
double discrepancy_witness(const Observation& o, const Hypothesis& g, const Discriminator& nu, int num_states,
                           int num_actions, bool importance_weighted);
double discrepancy_glm(const Observation& o, const Hypothesis& g, const Discriminator& nu, const FeatureMap& features,
                       double link_scale, int horizon, int num_actions);

double scaled_logistic(double x, double scale);

struct Dataset {
  int step = 0;
  std::vector<Observation> observations;
};

// Mean discrepancy in index order; generalized specs take the max over discriminators.
double empirical_loss(const Dataset& data, const Hypothesis& f, const Hypothesis& g, const BilinearSpec& spec);

// Per-discriminator mean (explicit enumeration; used as a reference path).
double empirical_loss_for(const Dataset& data, const Hypothesis& f, const Hypothesis& g, const BilinearSpec& spec,
                          std::optional<std::size_t> nu);

// Losses of every class member on one dataset, sharing sufficient statistics.
std::vector<double> batch_losses(const Dataset& data, const Hypothesis& f, const HypothesisClass& cls,
                                 const BilinearSpec& spec);

std::unique_ptr<Policy> estimation_policy(const BilinearSpec& spec, const Hypothesis& f);

// W_h and X_h maps of a bilinear class (test instances only).
struct BilinearWitness {
  std::function<std::vector<double>(int h, const Hypothesis& g)> w;
  std::function<std::vector<double>(int h, const Hypothesis& f)> x;
  double b_w = 0.0;
  double b_x = 0.0;
  double kappa = 1.0;
  // Some generalized families only satisfy the lower bound through zeta.
  bool exact_identity = true;
};

}  // namespace bilin
