#include "bilin/bilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "bilin/error.hpp"
#include "bilin/linalg.hpp"

namespace bilin {

const char* to_string(Family family) noexcept {
  switch (family) {
    case Family::q_rank: return "q_rank";
    case Family::v_rank: return "v_rank";
    case Family::mixture: return "mixture";
    case Family::linear_qv: return "linear_qv";
    case Family::bellman_complete: return "bellman_complete";
    case Family::low_occupancy: return "low_occupancy";
    case Family::knr: return "knr";
    case Family::glm_complete: return "glm_complete";
    case Family::witness: return "witness";
    case Family::factored: return "factored";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  static const std::pair<const char*, Family> kNames[] = {
      {"q_rank", Family::q_rank},
      {"v_rank", Family::v_rank},
      {"mixture", Family::mixture},
      {"linear_qv", Family::linear_qv},
      {"bellman_complete", Family::bellman_complete},
      {"low_occupancy", Family::low_occupancy},
      {"knr", Family::knr},
      {"glm_complete", Family::glm_complete},
      {"witness", Family::witness},
      {"factored", Family::factored},
  };
  for (const auto& [n, f] : kNames) {
    if (name == n) return f;
  }
  throw Error(ErrorCode::ConfigError, "unknown spec family '" + name + "'");
}

const char* to_string(EstimationRule rule) noexcept {
  return rule == EstimationRule::on_policy ? "on_policy" : "uniform";
}

double Transform::operator()(double x) const {
  switch (kind) {
    case Kind::identity: return x;
    case Kind::linear: return scale * x;
    case Kind::sqrt: return scale * std::sqrt(std::max(0.0, x));
  }
  return x;
}

namespace {

std::size_t factored_bits(const FactorStructure& fs) { return fs.model_size(); }

}  // namespace

bool BilinearSpec::generalized() const { return !discriminators.empty() || family == Family::factored; }

std::size_t BilinearSpec::num_discriminators(int h) const {
  if (family == Family::factored && factors) {
    const std::size_t bits = factored_bits(*factors);
    if (bits >= 63) return std::numeric_limits<std::size_t>::max();
    return std::size_t{1} << bits;
  }
  if (discriminators.empty()) return 0;
  return discriminators.at(static_cast<std::size_t>(h)).size();
}

Discriminator BilinearSpec::discriminator(int h, std::size_t nu) const {
  if (nu >= num_discriminators(h)) {
    throw Error(ErrorCode::DiscriminatorUnknown, "discriminator " + std::to_string(nu) + " not in the class");
  }
  if (family != Family::factored) return discriminators[static_cast<std::size_t>(h)][nu];
  // Sum of per-factor +-1 tables selected by the bits of nu.
  const FactorStructure& fs = *factors;
  const int S = fs.num_states();
  const int A = fs.num_actions;
  const int O = fs.values_per_factor;
  Discriminator d;
  d.values.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int n = 0; n < S; ++n) {
        const auto next = fs.decode(n);
        double v = 0.0;
        for (int i = 0; i < fs.num_factors; ++i) {
          const std::size_t bit =
              fs.table_offset(i) + (static_cast<std::size_t>(fs.parent_config(i, s)) * A + a) * O + next[i];
          v += ((nu >> bit) & 1U) ? 1.0 : -1.0;
        }
        d.values[(static_cast<std::size_t>(s) * A + a) * S + n] = v;
      }
    }
  }
  return d;
}

double scaled_logistic(double x, double scale) { return scale / (1.0 + std::exp(-x)); }

double discrepancy_q_rank(const Observation& o, const Hypothesis& g) {
  return g.q_value(o.step, o.state, o.action) - o.reward - g.v_value(o.step + 1, o.next_state);
}

double discrepancy_v_rank(const Observation& o, const Hypothesis& g, int num_actions) {
  if (o.action != g.greedy_action(o.step, o.state)) return 0.0;
  return num_actions * (g.v_value(o.step, o.state) - o.reward - g.v_value(o.step + 1, o.next_state));
}

double discrepancy_mixture(const Hypothesis& f, const Observation& o, const Hypothesis& g, const MixtureBasis& basis) {
  if (o.state.id < 0) throw Error(ErrorCode::NotEnumerable, "mixture discrepancy needs enumerable states");
  const int h = o.step;
  const int s = o.state.id;
  const int a = o.action;
  const auto& theta = g.payload().theta.at(static_cast<std::size_t>(h));
  const int H = f.horizon();
  double predicted = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const TabularKernel& base = basis.bases[k];
    double term = base.reward(h, s, a);
    if (h + 1 < H) {
      const auto row = base.row(h, s, a);
      for (int n = 0; n < base.num_states; ++n) {
        if (row[n] != 0.0) term += row[n] * f.tables().v_at(h + 1, n);
      }
    }
    predicted += theta[k] * term;
  }
  return predicted - (f.v_value(h + 1, o.next_state) + o.reward);
}

double discrepancy_linear_qv(const Observation& o, const Hypothesis& g, const FeatureMap& features, int horizon) {
  const auto& p = g.payload();
  double next = 0.0;
  if (o.step + 1 < horizon) next = features.psi_dot(o.step + 1, o.next_state, p.theta.at(o.step + 1));
  return features.phi_dot(o.step, o.state, o.action, p.w.at(o.step)) - o.reward - next;
}

double discrepancy_bellman_complete(const Observation& o, const Hypothesis& g, const FeatureMap& features,
                                    int horizon, int num_actions) {
  const auto& p = g.payload();
  double next = 0.0;
  if (o.step + 1 < horizon) {
    const auto& w_next = p.w.at(o.step + 1);
    next = features.phi_dot(o.step + 1, o.next_state, 0, w_next);
    for (int a = 1; a < num_actions; ++a) next = std::max(next, features.phi_dot(o.step + 1, o.next_state, a, w_next));
  }
  return features.phi_dot(o.step, o.state, o.action, p.w.at(o.step)) - o.reward - next;
}

double discrepancy_knr(const Observation& o, const Hypothesis& g, const FeatureMap& features, double noise_variance,
                       int state_dim) {
  const auto& u = g.payload().model;
  const std::size_t dphi = features.phi_dim();
  if (u.size() != dphi * static_cast<std::size_t>(state_dim) || o.next_state.x.size() != static_cast<std::size_t>(state_dim)) {
    throw Error(ErrorCode::DimensionMismatch, "knr operator or state has wrong shape");
  }
  const auto phi = features.phi(o.step, o.state, o.action);
  double sq = 0.0;
  for (int k = 0; k < state_dim; ++k) {
    double pred = 0.0;
    for (std::size_t j = 0; j < dphi; ++j) pred += u[k * dphi + j] * phi[j];
    const double r = pred - o.next_state.x[k];
    sq += r * r;
  }
  return sq - state_dim * noise_variance;
}

double discrepancy_witness(const Observation& o, const Hypothesis& g, const Discriminator& nu, int num_states,
                           int num_actions, bool importance_weighted) {
  const auto& kernel = g.payload().kernel;
  if (!kernel || o.state.id < 0) throw Error(ErrorCode::NotEnumerable, "witness discrepancy needs a tabular model");
  const int s = o.state.id;
  const int a = o.action;
  double weight = 1.0;
  if (importance_weighted) {
    if (a != g.greedy_action(o.step, o.state)) return 0.0;
    weight = num_actions;
  }
  const std::size_t base = (static_cast<std::size_t>(s) * num_actions + a) * num_states;
  const auto row = kernel->row(o.step, s, a);
  double predicted = 0.0;
  for (int n = 0; n < num_states; ++n) predicted += row[n] * nu.values[base + n];
  return weight * (predicted - nu.values[base + o.next_state.id]);
}

double discrepancy_glm(const Observation& o, const Hypothesis& g, const Discriminator& nu, const FeatureMap& features,
                       double link_scale, int horizon, int num_actions) {
  const auto& w = g.payload().w;
  double next = 0.0;
  if (o.step + 1 < horizon) {
    const auto& w_next = w.at(o.step + 1);
    for (int a = 0; a < num_actions; ++a) {
      next = std::max(next, scaled_logistic(features.phi_dot(o.step + 1, o.next_state, a, w_next), link_scale));
    }
  }
  const double now = scaled_logistic(features.phi_dot(o.step, o.state, o.action, w.at(o.step)), link_scale);
  const double weight = nu.values.at(static_cast<std::size_t>(o.state.id) * num_actions + o.action);
  return weight * (now - o.reward - next);
}

namespace {

const Discriminator& explicit_discriminator(const BilinearSpec& spec, int h, std::size_t nu) {
  if (static_cast<std::size_t>(h) >= spec.discriminators.size() ||
      nu >= spec.discriminators[static_cast<std::size_t>(h)].size()) {
    throw Error(ErrorCode::DiscriminatorUnknown, "discriminator " + std::to_string(nu) + " not in the class");
  }
  return spec.discriminators[static_cast<std::size_t>(h)][nu];
}

}  // namespace

double BilinearSpec::discrepancy(const Hypothesis& f, const Observation& o, const Hypothesis& g,
                                 std::optional<std::size_t> nu) const {
  if (nu && !generalized()) throw Error(ErrorCode::DiscriminatorUnknown, "spec has no discriminator class");
  if (!nu && generalized()) throw Error(ErrorCode::DiscriminatorUnknown, "spec requires a discriminator");
  switch (family) {
    case Family::q_rank:
    case Family::low_occupancy:
      return discrepancy_q_rank(o, g);
    case Family::v_rank:
      return discrepancy_v_rank(o, g, num_actions);
    case Family::mixture:
      return discrepancy_mixture(f, o, g, *mixture);
    case Family::linear_qv:
      return discrepancy_linear_qv(o, g, *features, horizon);
    case Family::bellman_complete:
      return discrepancy_bellman_complete(o, g, *features, horizon, num_actions);
    case Family::knr: {
      const double v = discrepancy_knr(o, g, *features, noise_sigma * noise_sigma, state_dim);
      if (std::abs(v) > loss_bound) truncations->fetch_add(1, std::memory_order_relaxed);
      return v;
    }
    case Family::glm_complete:
      return discrepancy_glm(o, g, explicit_discriminator(*this, o.step, *nu), *features, link_scale, horizon,
                             num_actions);
    case Family::witness:
      return discrepancy_witness(o, g, explicit_discriminator(*this, o.step, *nu), num_states, num_actions,
                                 importance_weighted);
    case Family::factored:
      return discrepancy_witness(o, g, discriminator(o.step, *nu), num_states, num_actions, false);
  }
  return 0.0;
}

namespace {

void validate_dataset(const Dataset& data) {
  if (data.observations.empty()) throw Error(ErrorCode::EmptyDataset, "dataset is empty");
  for (const auto& o : data.observations) {
    if (o.step != data.step) throw Error(ErrorCode::DimensionMismatch, "observation step differs from dataset step");
  }
}

// Sufficient statistics of a dataset for the factored discriminator class:
// per factor, counts of (parent config, action) cells and of next values.
struct FactoredCounts {
  std::vector<std::vector<double>> cell;
  std::vector<std::vector<double>> next;
  double m = 0.0;
};

FactoredCounts factored_counts(const Dataset& data, const FactorStructure& fs) {
  FactoredCounts c;
  const int A = fs.num_actions;
  const int O = fs.values_per_factor;
  c.cell.resize(fs.num_factors);
  c.next.resize(fs.num_factors);
  for (int i = 0; i < fs.num_factors; ++i) {
    c.cell[i].assign(static_cast<std::size_t>(fs.parent_configs(i)) * A, 0.0);
    c.next[i].assign(fs.table_size(i), 0.0);
  }
  for (const auto& o : data.observations) {
    const auto next = fs.decode(o.next_state.id);
    for (int i = 0; i < fs.num_factors; ++i) {
      const std::size_t cell = static_cast<std::size_t>(fs.parent_config(i, o.state.id)) * A + o.action;
      c.cell[i][cell] += 1.0;
      c.next[i][cell * O + next[i]] += 1.0;
    }
  }
  c.m = static_cast<double>(data.observations.size());
  return c;
}

// Max over all sums of per-factor +-1 tables: each table entry is chosen to
// match the sign of its coefficient.
double factored_max_loss(const FactoredCounts& c, const Hypothesis& g, const FactorStructure& fs) {
  const auto& model = g.payload().model;
  if (model.size() != fs.model_size()) throw Error(ErrorCode::DimensionMismatch, "factor tables have wrong size");
  const int O = fs.values_per_factor;
  double total = 0.0;
  for (int i = 0; i < fs.num_factors; ++i) {
    const std::size_t off = fs.table_offset(i);
    for (std::size_t cell = 0; cell < c.cell[i].size(); ++cell) {
      for (int o = 0; o < O; ++o) {
        const std::size_t k = cell * O + o;
        total += std::abs(c.cell[i][cell] * model[off + k] - c.next[i][k]);
      }
    }
  }
  return total / c.m;
}

}  // namespace

double empirical_loss_for(const Dataset& data, const Hypothesis& f, const Hypothesis& g, const BilinearSpec& spec,
                          std::optional<std::size_t> nu) {
  validate_dataset(data);
  double sum = 0.0;
  for (const auto& o : data.observations) sum += spec.discrepancy(f, o, g, nu);
  return sum / static_cast<double>(data.observations.size());
}

double empirical_loss(const Dataset& data, const Hypothesis& f, const Hypothesis& g, const BilinearSpec& spec) {
  validate_dataset(data);
  if (!spec.generalized()) return empirical_loss_for(data, f, g, spec, std::nullopt);
  if (spec.family == Family::factored) return factored_max_loss(factored_counts(data, *spec.factors), g, *spec.factors);
  const std::size_t n = spec.num_discriminators(data.step);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t nu = 0; nu < n; ++nu) best = std::max(best, empirical_loss_for(data, f, g, spec, nu));
  return best;
}

namespace {

struct WeightedObservation {
  const Observation* obs;
  double weight;
};

std::vector<WeightedObservation> compress(const Dataset& data) {
  std::map<std::tuple<int, int, int, double>, WeightedObservation> groups;
  for (const auto& o : data.observations) {
    auto [it, inserted] = groups.try_emplace({o.state.id, o.action, o.next_state.id, o.reward}, WeightedObservation{&o, 0.0});
    it->second.weight += 1.0;
  }
  std::vector<WeightedObservation> out;
  out.reserve(groups.size());
  for (auto& [key, wo] : groups) out.push_back(wo);
  return out;
}

// Quadratic sufficient statistics: mean phi phi^T, mean phi s'^T, mean ||s'||^2.
struct KnrMoments {
  std::vector<double> second;  // dphi x dphi
  std::vector<double> cross;   // dphi x ds
  double next_sq = 0.0;
};

KnrMoments knr_moments(const Dataset& data, const FeatureMap& features, int ds) {
  const std::size_t dphi = features.phi_dim();
  KnrMoments mo;
  mo.second.assign(dphi * dphi, 0.0);
  mo.cross.assign(dphi * ds, 0.0);
  std::vector<double> phi(dphi);
  for (const auto& o : data.observations) {
    features.phi(o.step, o.state, o.action, phi);
    for (std::size_t i = 0; i < dphi; ++i) {
      for (std::size_t j = 0; j < dphi; ++j) mo.second[i * dphi + j] += phi[i] * phi[j];
      for (int k = 0; k < ds; ++k) mo.cross[i * ds + k] += phi[i] * o.next_state.x[k];
    }
    for (int k = 0; k < ds; ++k) mo.next_sq += o.next_state.x[k] * o.next_state.x[k];
  }
  const double m = static_cast<double>(data.observations.size());
  for (double& v : mo.second) v /= m;
  for (double& v : mo.cross) v /= m;
  mo.next_sq /= m;
  return mo;
}

double knr_loss_from_moments(const KnrMoments& mo, const std::vector<double>& u, std::size_t dphi, int ds,
                             double noise_variance) {
  double total = mo.next_sq - ds * noise_variance;
  for (int k = 0; k < ds; ++k) {
    const double* uk = u.data() + k * dphi;
    for (std::size_t i = 0; i < dphi; ++i) {
      for (std::size_t j = 0; j < dphi; ++j) total += uk[i] * mo.second[i * dphi + j] * uk[j];
      total -= 2.0 * uk[i] * mo.cross[i * ds + k];
    }
  }
  return total;
}

}  // namespace

std::vector<double> batch_losses(const Dataset& data, const Hypothesis& f, const HypothesisClass& cls,
                                 const BilinearSpec& spec) {
  validate_dataset(data);
  std::vector<double> out(cls.size());
  if (spec.family == Family::factored) {
    const auto counts = factored_counts(data, *spec.factors);
    for (std::size_t g = 0; g < cls.size(); ++g) out[g] = factored_max_loss(counts, cls[g], *spec.factors);
    return out;
  }
  if (spec.family == Family::knr && !spec.generalized()) {
    const auto mo = knr_moments(data, *spec.features, spec.state_dim);
    for (std::size_t g = 0; g < cls.size(); ++g) {
      out[g] = knr_loss_from_moments(mo, cls[g].payload().model, spec.features->phi_dim(), spec.state_dim,
                                     spec.noise_sigma * spec.noise_sigma);
    }
    return out;
  }
  if (data.observations.front().state.id < 0) {
    for (std::size_t g = 0; g < cls.size(); ++g) out[g] = empirical_loss(data, f, cls[g], spec);
    return out;
  }
  const auto groups = compress(data);
  const double m = static_cast<double>(data.observations.size());
  const std::size_t n_nu = spec.generalized() ? spec.num_discriminators(data.step) : 0;
  std::vector<Discriminator> nus;
  for (std::size_t nu = 0; nu < n_nu; ++nu) nus.push_back(spec.discriminator(data.step, nu));
  for (std::size_t g = 0; g < cls.size(); ++g) {
    const Hypothesis& hyp = cls[g];
    if (n_nu == 0) {
      double sum = 0.0;
      for (const auto& wo : groups) sum += wo.weight * spec.discrepancy(f, *wo.obs, hyp);
      out[g] = sum / m;
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t nu = 0; nu < n_nu; ++nu) {
      double sum = 0.0;
      for (const auto& wo : groups) {
        const Observation& o = *wo.obs;
        double v = 0.0;
        if (spec.family == Family::glm_complete) {
          v = discrepancy_glm(o, hyp, nus[nu], *spec.features, spec.link_scale, spec.horizon, spec.num_actions);
        } else {
          v = discrepancy_witness(o, hyp, nus[nu], spec.num_states, spec.num_actions, spec.importance_weighted);
        }
        sum += wo.weight * v;
      }
      best = std::max(best, sum / m);
    }
    out[g] = best;
  }
  return out;
}

std::unique_ptr<Policy> estimation_policy(const BilinearSpec& spec, const Hypothesis& f) {
  if (spec.estimation == EstimationRule::on_policy) return std::make_unique<GreedyPolicy>(f);
  return std::make_unique<UniformPolicy>(spec.num_actions);
}

}  // namespace bilin
