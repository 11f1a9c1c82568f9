#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bilin/linalg.hpp"

namespace bilin {

// Regularized second-moment matrix lambda*I + sum x x^T with its inverse and log-determinant.
class PrecisionState {
 public:
  static constexpr std::size_t kRefactorInterval = 256;

  PrecisionState(std::size_t dim, double lambda);

  std::size_t dim() const noexcept { return dim_; }
  double lambda() const noexcept { return lambda_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  const Matrix& sigma_inv() const noexcept { return sigma_inv_; }
  double log_det() const noexcept { return log_det_; }
  std::size_t count() const noexcept { return count_; }

  // ||x||^2 in the inverse metric.
  double inverse_norm_sq(std::span<const double> x) const;

  // In-place rank-1 update; returns ln(1 + ||x||^2_{Sigma^{-1}}) before the update.
  double apply(std::span<const double> x);

 private:
  void refactor();

  std::size_t dim_;
  double lambda_;
  Matrix sigma_;
  Matrix sigma_inv_;
  double log_det_;
  std::size_t count_ = 0;
  std::vector<double> scratch_;
};

PrecisionState update(const PrecisionState& state, std::span<const double> x);

using CandidateSet = std::vector<std::vector<double>>;

struct PotentialSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

PotentialSides potential_identity(const CandidateSet& sequence, double lambda);

enum class GainMethod { exact, greedy };

const char* to_string(GainMethod method) noexcept;
GainMethod parse_gain_method(const std::string& name);

struct InfoGainReport {
  double gamma = 0.0;
  std::vector<std::size_t> sequence;
  std::vector<double> per_step_terms;
  GainMethod method = GainMethod::greedy;
};

// Exact search is allowed when |X|^n does not exceed this.
inline constexpr double kExactSequenceBudget = 1e6;
inline constexpr std::size_t kCriticalGainCap = 100000;

InfoGainReport max_info_gain(const CandidateSet& candidates, double lambda, std::size_t n, GainMethod method);

std::size_t critical_info_gain(const CandidateSet& candidates, double lambda, GainMethod method,
                               std::size_t cap = kCriticalGainCap);

// Sum of per-step gains over several candidate sets.
std::size_t critical_info_gain(const std::vector<CandidateSet>& per_step, double lambda, GainMethod method,
                               std::size_t cap = kCriticalGainCap);

struct CoverCertificate {
  double lambda = 0.0;
  std::size_t t_star = 0;
  double gamma = 0.0;                // greedy log-det growth after T steps
  double sup_norm_bound = 0.0;       // exp(gamma / T) - 1
  double norm_at_t_star = 0.0;       // max_x ||x||^2 in the inverse metric at t_star
  double weight_gap_bound = 0.0;     // eps * sqrt(sup_norm_bound)
  double cover_size_log = 0.0;
  double b_x = 0.0;
  std::vector<std::size_t> sequence;
  std::vector<double> per_step_terms;
};

CoverCertificate cover_certificate(const CandidateSet& candidates, double weight_bound, double eps, std::size_t T);

}  // namespace bilin
