#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bilin/mdp.hpp"

namespace bilin {

// Finite-dimensional state-action features phi(s,a) and optional state features psi(s).
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;

  virtual std::size_t phi_dim() const = 0;
  virtual void phi(int h, const State& s, int a, std::span<double> out) const = 0;
  virtual double phi_dot(int h, const State& s, int a, std::span<const double> w) const;

  virtual std::size_t psi_dim() const { return 0; }
  virtual void psi(int h, const State& s, std::span<double> out) const;
  virtual double psi_dot(int h, const State& s, std::span<const double> w) const;

  std::vector<double> phi(int h, const State& s, int a) const;
  std::vector<double> psi(int h, const State& s) const;
};

// phi(s,a) = e_{cluster(s)*A + a}, psi(s) = e_{cluster(s)}.
class OneHotFeatures final : public FeatureMap {
 public:
  using FeatureMap::phi;
  using FeatureMap::psi;

  OneHotFeatures(std::vector<int> cluster_of, int num_actions);
  static OneHotFeatures identity(int num_states, int num_actions);

  std::size_t phi_dim() const override { return static_cast<std::size_t>(clusters_) * num_actions_; }
  void phi(int h, const State& s, int a, std::span<double> out) const override;
  double phi_dot(int h, const State& s, int a, std::span<const double> w) const override;

  std::size_t psi_dim() const override { return static_cast<std::size_t>(clusters_); }
  void psi(int h, const State& s, std::span<double> out) const override;
  double psi_dot(int h, const State& s, std::span<const double> w) const override;

  int index(const State& s, int a) const { return cluster_of_[s.id] * num_actions_ + a; }

 private:
  std::vector<int> cluster_of_;
  int num_actions_;
  int clusters_;
};

// Explicit per-(s,a) feature vectors for tabular states.
class TableFeatures final : public FeatureMap {
 public:
  using FeatureMap::phi;
  using FeatureMap::psi;

  TableFeatures(int num_states, int num_actions, std::size_t dim, std::vector<double> values);

  std::size_t phi_dim() const override { return dim_; }
  void phi(int h, const State& s, int a, std::span<double> out) const override;
  double phi_dot(int h, const State& s, int a, std::span<const double> w) const override;
  std::span<const double> row(int s, int a) const {
    return {values_.data() + (static_cast<std::size_t>(s) * num_actions_ + a) * dim_, dim_};
  }

 private:
  int num_states_;
  int num_actions_;
  std::size_t dim_;
  std::vector<double> values_;
};

// phi_j(x, a) = cos(omega_j . x + offset_{j,a}) for vector states.
class RandomFourierFeatures final : public FeatureMap {
 public:
  using FeatureMap::phi;
  using FeatureMap::psi;

  RandomFourierFeatures(std::size_t state_dim, std::size_t dim, int num_actions, std::vector<double> omega,
                        std::vector<double> offsets);

  std::size_t phi_dim() const override { return dim_; }
  void phi(int h, const State& s, int a, std::span<double> out) const override;
  std::size_t state_dim() const { return state_dim_; }
  const std::vector<double>& omega() const { return omega_; }
  const std::vector<double>& offsets() const { return offsets_; }

 private:
  std::size_t state_dim_;
  std::size_t dim_;
  int num_actions_;
  std::vector<double> omega_;    // dim x state_dim
  std::vector<double> offsets_;  // dim x num_actions
};

// Base models of a linear mixture: psi_k(s,a) = reward of model k, phi_k(s,a,s') = its kernel.
struct MixtureBasis {
  std::vector<TabularKernel> bases;
  std::size_t size() const { return bases.size(); }
};

// Factor layout for factored MDPs: state = tuple of factor values, mixed radix with factor 0 least significant.
struct FactorStructure {
  int num_factors = 0;
  int values_per_factor = 0;
  int num_actions = 0;
  std::vector<std::vector<int>> parents;

  FactorStructure() = default;
  FactorStructure(int num_factors, int values_per_factor, int num_actions, std::vector<std::vector<int>> parents);

  int num_states() const;
  std::vector<int> decode(int s) const;
  int encode(const std::vector<int>& values) const;
  // Index of the parent configuration of factor i in state s.
  int parent_config(int i, int s) const;
  int parent_configs(int i) const;
  // Offset of factor i's table inside a flattened model (layout [(u*A + a)*O + o]).
  std::size_t table_offset(int i) const { return offsets_[i]; }
  std::size_t table_size(int i) const;
  std::size_t model_size() const { return offsets_.back(); }

 private:
  std::vector<std::size_t> offsets_;
};

}  // namespace bilin
