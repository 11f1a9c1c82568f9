#pragma once

#include <stdexcept>
#include <string>

namespace bilin {

enum class ErrorCode {
  NotTabular,
  NotEnumerable,
  PlanningUnavailable,
  DimensionMismatch,
  BudgetExceeded,
  EmptyCandidates,
  NoCrossing,
  InfeasibleProgram,
  EmptyDataset,
  DiscriminatorUnknown,
  NotIrrelevant,
  SchemaMismatch,
  ConfigError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when no hypothesis satisfies the version-space constraints.
class InfeasibleError : public Error {
 public:
  InfeasibleError(int iteration, double radius)
      : Error(ErrorCode::InfeasibleProgram,
              "no feasible hypothesis at iteration " + std::to_string(iteration) +
                  " (R=" + std::to_string(radius) + ")"),
        iteration_(iteration),
        radius_(radius) {}

  int iteration() const noexcept { return iteration_; }
  double radius() const noexcept { return radius_; }

 private:
  int iteration_;
  double radius_;
};

}  // namespace bilin
