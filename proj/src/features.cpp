#include "bilin/features.hpp"

#include <algorithm>
#include <cmath>

#include "bilin/error.hpp"
#include "bilin/linalg.hpp"

namespace bilin {

double FeatureMap::phi_dot(int h, const State& s, int a, std::span<const double> w) const {
  std::vector<double> buf(phi_dim());
  phi(h, s, a, buf);
  return dot(buf, w);
}

void FeatureMap::psi(int, const State&, std::span<double>) const {
  throw Error(ErrorCode::DimensionMismatch, "feature map has no state features");
}

double FeatureMap::psi_dot(int h, const State& s, std::span<const double> w) const {
  std::vector<double> buf(psi_dim());
  psi(h, s, buf);
  return dot(buf, w);
}

std::vector<double> FeatureMap::phi(int h, const State& s, int a) const {
  std::vector<double> out(phi_dim());
  phi(h, s, a, out);
  return out;
}

std::vector<double> FeatureMap::psi(int h, const State& s) const {
  std::vector<double> out(psi_dim());
  psi(h, s, out);
  return out;
}

OneHotFeatures::OneHotFeatures(std::vector<int> cluster_of, int num_actions)
    : cluster_of_(std::move(cluster_of)), num_actions_(num_actions) {
  if (cluster_of_.empty()) throw Error(ErrorCode::DimensionMismatch, "empty aggregation map");
  clusters_ = *std::max_element(cluster_of_.begin(), cluster_of_.end()) + 1;
}

OneHotFeatures OneHotFeatures::identity(int num_states, int num_actions) {
  std::vector<int> ids(num_states);
  for (int s = 0; s < num_states; ++s) ids[s] = s;
  return OneHotFeatures(std::move(ids), num_actions);
}

void OneHotFeatures::phi(int, const State& s, int a, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[index(s, a)] = 1.0;
}

double OneHotFeatures::phi_dot(int, const State& s, int a, std::span<const double> w) const {
  return w[index(s, a)];
}

void OneHotFeatures::psi(int, const State& s, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[cluster_of_[s.id]] = 1.0;
}

double OneHotFeatures::psi_dot(int, const State& s, std::span<const double> w) const { return w[cluster_of_[s.id]]; }

TableFeatures::TableFeatures(int num_states, int num_actions, std::size_t dim, std::vector<double> values)
    : num_states_(num_states), num_actions_(num_actions), dim_(dim), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(num_states) * num_actions * dim) {
    throw Error(ErrorCode::DimensionMismatch, "feature table has wrong size");
  }
}

void TableFeatures::phi(int, const State& s, int a, std::span<double> out) const {
  const auto r = row(s.id, a);
  std::copy(r.begin(), r.end(), out.begin());
}

double TableFeatures::phi_dot(int, const State& s, int a, std::span<const double> w) const {
  return dot(row(s.id, a), w);
}

RandomFourierFeatures::RandomFourierFeatures(std::size_t state_dim, std::size_t dim, int num_actions,
                                             std::vector<double> omega, std::vector<double> offsets)
    : state_dim_(state_dim),
      dim_(dim),
      num_actions_(num_actions),
      omega_(std::move(omega)),
      offsets_(std::move(offsets)) {
  if (omega_.size() != dim * state_dim || offsets_.size() != dim * static_cast<std::size_t>(num_actions)) {
    throw Error(ErrorCode::DimensionMismatch, "random feature parameters have wrong size");
  }
}

void RandomFourierFeatures::phi(int, const State& s, int a, std::span<double> out) const {
  if (s.x.size() != state_dim_) throw Error(ErrorCode::DimensionMismatch, "state has wrong dimension");
  for (std::size_t j = 0; j < dim_; ++j) {
    double z = offsets_[j * num_actions_ + a];
    for (std::size_t k = 0; k < state_dim_; ++k) z += omega_[j * state_dim_ + k] * s.x[k];
    out[j] = std::cos(z);
  }
}

FactorStructure::FactorStructure(int num_factors, int values_per_factor, int num_actions,
                                 std::vector<std::vector<int>> parents)
    : num_factors(num_factors), values_per_factor(values_per_factor), num_actions(num_actions),
      parents(std::move(parents)) {
  if (num_factors < 1 || values_per_factor < 2 || num_actions < 1 ||
      this->parents.size() != static_cast<std::size_t>(num_factors)) {
    throw Error(ErrorCode::DimensionMismatch, "invalid factor structure");
  }
  for (const auto& pa : this->parents) {
    for (int p : pa) {
      if (p < 0 || p >= num_factors) throw Error(ErrorCode::DimensionMismatch, "parent index out of range");
    }
  }
  offsets_.assign(num_factors + 1, 0);
  for (int i = 0; i < num_factors; ++i) offsets_[i + 1] = offsets_[i] + table_size(i);
}

int FactorStructure::num_states() const {
  int n = 1;
  for (int i = 0; i < num_factors; ++i) n *= values_per_factor;
  return n;
}

std::vector<int> FactorStructure::decode(int s) const {
  std::vector<int> v(num_factors);
  for (int i = 0; i < num_factors; ++i) {
    v[i] = s % values_per_factor;
    s /= values_per_factor;
  }
  return v;
}

int FactorStructure::encode(const std::vector<int>& values) const {
  int s = 0;
  for (int i = num_factors - 1; i >= 0; --i) s = s * values_per_factor + values[i];
  return s;
}

int FactorStructure::parent_configs(int i) const {
  int n = 1;
  for (std::size_t k = 0; k < parents[i].size(); ++k) n *= values_per_factor;
  return n;
}

int FactorStructure::parent_config(int i, int s) const {
  const auto v = decode(s);
  int u = 0;
  for (int p : parents[i]) u = u * values_per_factor + v[p];
  return u;
}

std::size_t FactorStructure::table_size(int i) const {
  return static_cast<std::size_t>(parent_configs(i)) * num_actions * values_per_factor;
}

}  // namespace bilin
