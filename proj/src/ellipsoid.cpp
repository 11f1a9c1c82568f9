#include "bilin/ellipsoid.hpp"

#include <algorithm>
#include <cmath>

#include "bilin/error.hpp"
#include "bilin/simd/kernels.hpp"

namespace bilin {

PrecisionState::PrecisionState(std::size_t dim, double lambda)
    : dim_(dim),
      lambda_(lambda),
      sigma_(Matrix::identity(dim, lambda)),
      sigma_inv_(Matrix::identity(dim, 1.0 / lambda)),
      log_det_(static_cast<double>(dim) * std::log(lambda)),
      scratch_(dim) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::DimensionMismatch, "lambda must be positive");
}

double PrecisionState::inverse_norm_sq(std::span<const double> x) const {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "vector length does not match precision dim");
  return simd::active().quad(sigma_inv_.data(), x.data(), dim_);
}

double PrecisionState::apply(std::span<const double> x) {
  if (x.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "vector length does not match precision dim");
  const auto& k = simd::active();
  k.gemv(sigma_inv_.data(), x.data(), scratch_.data(), dim_, dim_);
  const double q = std::max(0.0, k.dot(x.data(), scratch_.data(), dim_));
  k.syr(sigma_inv_.data(), scratch_.data(), -1.0 / (1.0 + q), dim_);
  k.syr(sigma_.data(), x.data(), 1.0, dim_);
  const double term = std::log1p(q);
  log_det_ += term;
  ++count_;
  if (count_ % kRefactorInterval == 0) refactor();
  return term;
}

void PrecisionState::refactor() {
  sigma_inv_ = inverse_spd(sigma_);
  log_det_ = log_det_spd(sigma_);
}

PrecisionState update(const PrecisionState& state, std::span<const double> x) {
  PrecisionState next = state;
  next.apply(x);
  return next;
}

PotentialSides potential_identity(const CandidateSet& sequence, double lambda) {
  if (sequence.empty()) return {};
  PrecisionState state(sequence.front().size(), lambda);
  PotentialSides sides;
  for (const auto& x : sequence) sides.lhs += state.apply(x);
  sides.rhs = log_det_spd(state.sigma()) - static_cast<double>(state.dim()) * std::log(lambda);
  return sides;
}

const char* to_string(GainMethod method) noexcept { return method == GainMethod::exact ? "exact" : "greedy"; }

GainMethod parse_gain_method(const std::string& name) {
  if (name == "exact") return GainMethod::exact;
  if (name == "greedy") return GainMethod::greedy;
  throw Error(ErrorCode::ConfigError, "unknown information-gain method '" + name + "'");
}

namespace {

std::size_t validate(const CandidateSet& candidates) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "candidate set is empty");
  const std::size_t d = candidates.front().size();
  for (const auto& x : candidates) {
    if (x.size() != d) throw Error(ErrorCode::DimensionMismatch, "candidate vectors differ in length");
  }
  return d;
}

std::size_t greedy_pick(const PrecisionState& state, const CandidateSet& candidates) {
  std::size_t best = 0;
  double best_q = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double q = state.inverse_norm_sq(candidates[i]);
    if (q > best_q) {
      best_q = q;
      best = i;
    }
  }
  return best;
}

InfoGainReport greedy_gain(const CandidateSet& candidates, double lambda, std::size_t n) {
  InfoGainReport report;
  report.method = GainMethod::greedy;
  PrecisionState state(candidates.front().size(), lambda);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = greedy_pick(state, candidates);
    const double term = state.apply(candidates[i]);
    report.sequence.push_back(i);
    report.per_step_terms.push_back(term);
    report.gamma += term;
  }
  return report;
}

// Log-det growth depends only on the multiset of chosen vectors, so the search
// walks non-decreasing index sequences.
struct ExactSearch {
  const CandidateSet& candidates;
  std::size_t n;
  std::vector<PrecisionState> stack;
  std::vector<std::size_t> path;
  std::vector<std::size_t> best_path;
  double best = -1.0;

  void visit(std::size_t depth, std::size_t first, double gain) {
    if (depth == n) {
      if (gain > best) {
        best = gain;
        best_path = path;
      }
      return;
    }
    for (std::size_t i = first; i < candidates.size(); ++i) {
      stack[depth + 1] = stack[depth];
      const double term = stack[depth + 1].apply(candidates[i]);
      path[depth] = i;
      visit(depth + 1, i, gain + term);
    }
  }
};

InfoGainReport exact_gain(const CandidateSet& candidates, double lambda, std::size_t n) {
  const double sequences = std::pow(static_cast<double>(candidates.size()), static_cast<double>(n));
  if (sequences > kExactSequenceBudget) {
    throw Error(ErrorCode::BudgetExceeded, "exact information gain needs |X|^n <= 1e6 sequences");
  }
  InfoGainReport report;
  report.method = GainMethod::exact;
  if (n == 0) return report;
  const PrecisionState root(candidates.front().size(), lambda);
  ExactSearch search{candidates, n, std::vector<PrecisionState>(n + 1, root), std::vector<std::size_t>(n), {}, -1.0};
  search.visit(0, 0, 0.0);
  PrecisionState replay = root;
  for (std::size_t i : search.best_path) {
    const double term = replay.apply(candidates[i]);
    report.sequence.push_back(i);
    report.per_step_terms.push_back(term);
    report.gamma += term;
  }
  return report;
}

}  // namespace

InfoGainReport max_info_gain(const CandidateSet& candidates, double lambda, std::size_t n, GainMethod method) {
  validate(candidates);
  if (!(lambda > 0.0)) throw Error(ErrorCode::DimensionMismatch, "lambda must be positive");
  return method == GainMethod::exact ? exact_gain(candidates, lambda, n) : greedy_gain(candidates, lambda, n);
}

std::size_t critical_info_gain(const CandidateSet& candidates, double lambda, GainMethod method, std::size_t cap) {
  return critical_info_gain(std::vector<CandidateSet>{candidates}, lambda, method, cap);
}

std::size_t critical_info_gain(const std::vector<CandidateSet>& per_step, double lambda, GainMethod method,
                               std::size_t cap) {
  if (per_step.empty()) throw Error(ErrorCode::EmptyCandidates, "no candidate sets");
  for (const auto& set : per_step) validate(set);
  if (method == GainMethod::exact) {
    for (std::size_t k = 1; k <= cap; ++k) {
      double gamma = 0.0;
      for (const auto& set : per_step) gamma += exact_gain(set, lambda, k).gamma;
      if (static_cast<double>(k) >= gamma) return k;
    }
    throw Error(ErrorCode::NoCrossing, "critical information gain not reached within the iteration cap");
  }
  // Greedy sequences are prefix-consistent, so gains extend one step per k.
  std::vector<PrecisionState> states;
  states.reserve(per_step.size());
  for (const auto& set : per_step) states.emplace_back(set.front().size(), lambda);
  double gamma = 0.0;
  for (std::size_t k = 1; k <= cap; ++k) {
    for (std::size_t h = 0; h < per_step.size(); ++h) {
      const std::size_t i = greedy_pick(states[h], per_step[h]);
      gamma += states[h].apply(per_step[h][i]);
    }
    if (static_cast<double>(k) >= gamma) return k;
  }
  throw Error(ErrorCode::NoCrossing, "critical information gain not reached within the iteration cap");
}

CoverCertificate cover_certificate(const CandidateSet& candidates, double weight_bound, double eps, std::size_t T) {
  validate(candidates);
  if (!(weight_bound > 0.0) || !(eps > 0.0) || T == 0) {
    throw Error(ErrorCode::DimensionMismatch, "cover certificate needs B_W > 0, eps > 0, T >= 1");
  }
  CoverCertificate cert;
  cert.lambda = eps * eps / (8.0 * weight_bound * weight_bound);
  for (const auto& x : candidates) cert.b_x = std::max(cert.b_x, norm2(x));
  const InfoGainReport greedy = greedy_gain(candidates, cert.lambda, T);
  cert.sequence = greedy.sequence;
  cert.per_step_terms = greedy.per_step_terms;
  cert.gamma = greedy.gamma;
  cert.t_star = static_cast<std::size_t>(
      std::min_element(cert.per_step_terms.begin(), cert.per_step_terms.end()) - cert.per_step_terms.begin());
  cert.norm_at_t_star = std::expm1(cert.per_step_terms[cert.t_star]);
  cert.sup_norm_bound = std::expm1(cert.gamma / static_cast<double>(T));
  cert.weight_gap_bound = eps * std::sqrt(cert.sup_norm_bound);
  cert.cover_size_log = static_cast<double>(T) *
                        std::log(1.0 + 3.0 * weight_bound * cert.b_x * std::sqrt(static_cast<double>(T)) / eps);
  return cert;
}

}  // namespace bilin
