#include "bilin/error.hpp"

namespace bilin {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotTabular: return "NotTabular";
    case ErrorCode::NotEnumerable: return "NotEnumerable";
    case ErrorCode::PlanningUnavailable: return "PlanningUnavailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::InfeasibleProgram: return "InfeasibleProgram";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DiscriminatorUnknown: return "DiscriminatorUnknown";
    case ErrorCode::NotIrrelevant: return "NotIrrelevant";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace bilin
