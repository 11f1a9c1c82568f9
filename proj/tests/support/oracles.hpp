#pragma once

// Reference computations for tests. Each one re-derives its quantity by plain
// enumeration and shares no summation code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "bilin/bilinear.hpp"
#include "bilin/hypothesis.hpp"
#include "bilin/mdp.hpp"

namespace oracle {

using bilin::BilinearSpec;
using bilin::EpisodicMdp;
using bilin::Hypothesis;
using bilin::Observation;
using bilin::State;

// Distribution of s_h when following the greedy policy of f from s0.
inline std::vector<double> rollin_states(const EpisodicMdp& mdp, const Hypothesis& f, int h) {
  const int S = mdp.num_states();
  std::vector<double> d(S, 0.0);
  d[mdp.initial_state().id] = 1.0;
  for (int k = 0; k < h; ++k) {
    std::vector<double> next(S, 0.0);
    for (int s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      const int a = f.greedy_action(k, State::tabular(s));
      for (const auto& t : mdp.transition_probs(k, s, a)) next[t.next] += d[s] * t.prob;
    }
    d = std::move(next);
  }
  return d;
}

// rho[s*A + a]: joint law of (s_h, a_h) under roll-in f and the spec's estimation rule.
inline std::vector<double> rollin_state_actions(const EpisodicMdp& mdp, const BilinearSpec& spec, const Hypothesis& f,
                                                int h) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const auto d = rollin_states(mdp, f, h);
  std::vector<double> rho(static_cast<std::size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s) {
    if (spec.estimation == bilin::EstimationRule::uniform) {
      for (int a = 0; a < A; ++a) rho[s * A + a] = d[s] / A;
    } else {
      rho[s * A + f.greedy_action(h, State::tabular(s))] = d[s];
    }
  }
  return rho;
}

// E[l_f(o_h, g, nu)] by enumerating (s_h, a_h, s_{h+1}) with the mean reward.
inline double expected_loss(const EpisodicMdp& mdp, const BilinearSpec& spec, const Hypothesis& f,
                            const Hypothesis& g, int h, std::optional<std::size_t> nu = std::nullopt) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const auto rho = rollin_state_actions(mdp, spec, f, h);
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double w = rho[s * A + a];
      if (w == 0.0) continue;
      Observation o;
      o.step = h;
      o.state = State::tabular(s);
      o.action = a;
      o.reward = mdp.expected_reward(h, o.state, a);
      for (const auto& t : mdp.transition_probs(h, s, a)) {
        o.next_state = State::tabular(t.next);
        total += w * t.prob * spec.discrepancy(f, o, g, nu);
      }
    }
  }
  return total;
}

// Max over an explicit discriminator list of the exact per-discriminator expectation.
inline double expected_loss_max(const EpisodicMdp& mdp, const BilinearSpec& spec, const Hypothesis& f,
                                const Hypothesis& g, int h) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t nu = 0; nu < spec.num_discriminators(h); ++nu) {
    best = std::max(best, expected_loss(mdp, spec, f, g, h, nu));
  }
  return best;
}

// c[(s*A + a)*S + n] with E[l(nu)] = sum c * nu for model-based discrepancies without importance weights.
inline std::vector<double> model_gap_coefficients(const EpisodicMdp& mdp, const BilinearSpec& spec,
                                                  const Hypothesis& f, const Hypothesis& g, int h) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const auto rho = rollin_state_actions(mdp, spec, f, h);
  const auto& model = *g.payload().kernel;
  std::vector<double> c(static_cast<std::size_t>(S) * A * S, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double w = rho[s * A + a];
      for (int n = 0; n < S; ++n) c[(s * A + a) * S + n] += w * model.prob(h, s, a, n);
      for (const auto& t : mdp.transition_probs(h, s, a)) c[(s * A + a) * S + t.next] -= w * t.prob;
    }
  }
  return c;
}

// Average Bellman error of f under its own roll-in at step h.
inline double bellman_error(const EpisodicMdp& mdp, const Hypothesis& f, int h) {
  const int S = mdp.num_states();
  const auto d = rollin_states(mdp, f, h);
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    if (d[s] == 0.0) continue;
    const State st = State::tabular(s);
    const int a = f.greedy_action(h, st);
    double target = mdp.expected_reward(h, st, a);
    for (const auto& t : mdp.transition_probs(h, s, a)) target += t.prob * f.v_value(h + 1, State::tabular(t.next));
    total += d[s] * (f.q_value(h, st, a) - target);
  }
  return total;
}

// Exact value of a deterministic greedy policy by forward occupancy.
inline double policy_value(const EpisodicMdp& mdp, const Hypothesis& f) {
  double v = 0.0;
  for (int h = 0; h < mdp.horizon(); ++h) {
    const auto d = rollin_states(mdp, f, h);
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (d[s] > 0.0) v += d[s] * mdp.expected_reward(h, State::tabular(s), f.greedy_action(h, State::tabular(s)));
    }
  }
  return v;
}

// Optimal value at s0 by exhaustive backward recursion over all states.
inline double optimal_value(const EpisodicMdp& mdp) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  std::vector<double> next(S, 0.0);
  for (int h = mdp.horizon() - 1; h >= 0; --h) {
    std::vector<double> cur(S, -std::numeric_limits<double>::infinity());
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double q = mdp.expected_reward(h, State::tabular(s), a);
        for (const auto& t : mdp.transition_probs(h, s, a)) q += t.prob * next[t.next];
        cur[s] = std::max(cur[s], q);
      }
    }
    next = std::move(cur);
  }
  return next[mdp.initial_state().id];
}

inline double inner(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::vector<double> minus(std::vector<double> a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

// ln det(lambda I + sum x x^T) - d ln(lambda) by dense LU.
inline double log_det_growth(const std::vector<std::vector<double>>& xs, std::size_t d, double lambda) {
  Eigen::MatrixXd m = lambda * Eigen::MatrixXd::Identity(d, d);
  for (const auto& x : xs) {
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(d));
    m += v * v.transpose();
  }
  return std::log(m.determinant()) - static_cast<double>(d) * std::log(lambda);
}

// Max of log_det_growth over every length-n sequence from the candidates (multisets suffice).
inline double brute_force_gain(const std::vector<std::vector<double>>& cands, std::size_t n, double lambda) {
  const std::size_t d = cands.front().size();
  std::vector<std::size_t> idx(n, 0);
  double best = n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (n == 0) return best;
  while (true) {
    std::vector<std::vector<double>> seq;
    for (std::size_t i : idx) seq.push_back(cands[i]);
    best = std::max(best, log_det_growth(seq, d, lambda));
    std::size_t k = 0;
    while (k < n && ++idx[k] == cands.size()) idx[k++] = 0;
    if (k == n) break;
  }
  return best;
}

}  // namespace oracle

namespace oracle {

// Sampled check of the greedy cover: for random w, w' = (projection of w on the span of the
// greedy prefix) + a perturbation of size eps / sqrt(2 T B_X^2) inside that span. Returns the
// largest sup_x |(w - w') . x| seen.
inline double sampled_cover_gap(const std::vector<std::vector<double>>& cands, const std::vector<std::size_t>& sequence,
                                std::size_t t_star, double weight_bound, double eps, std::size_t T, double b_x,
                                bilin::Rng& rng, int pairs) {
  const std::size_t d = cands.front().size();
  Eigen::MatrixXd basis(d, t_star);
  for (std::size_t i = 0; i < t_star; ++i) {
    basis.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(cands[sequence[i]].data(), d);
  }
  Eigen::MatrixXd q;
  if (t_star > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    qr.setThreshold(1e-12);
    q = Eigen::MatrixXd(qr.householderQ()).leftCols(qr.rank());
  } else {
    q = Eigen::MatrixXd(d, 0);
  }
  const double eps_net = b_x > 0.0 ? eps / std::sqrt(2.0 * static_cast<double>(T) * b_x * b_x) : 0.0;
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Eigen::VectorXd w(d);
    for (std::size_t i = 0; i < d; ++i) w[static_cast<Eigen::Index>(i)] = bilin::standard_normal(rng);
    w *= 0.5 * weight_bound * bilin::uniform01(rng) / std::max(w.norm(), 1e-300);
    Eigen::VectorXd w_bar = q * (q.transpose() * w);
    Eigen::VectorXd w_prime = w_bar;
    if (q.cols() > 0) {
      Eigen::VectorXd z(q.cols());
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = bilin::standard_normal(rng);
      w_prime += q * z * (eps_net * bilin::uniform01(rng) / std::max(z.norm(), 1e-300));
    }
    for (const auto& x : cands) {
      const double gap = std::abs((w - w_prime).dot(Eigen::Map<const Eigen::VectorXd>(x.data(), d)));
      worst = std::max(worst, gap);
    }
  }
  return worst;
}

}  // namespace oracle
