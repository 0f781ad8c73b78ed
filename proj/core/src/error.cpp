#include "invfilt/error.hpp"

namespace invfilt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ObservabilityViolated: return "ObservabilityViolated";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NonOrthogonal: return "NonOrthogonal";
    case ErrorCode::ImproperTransferFunction: return "ImproperTransferFunction";
    case ErrorCode::ZeroAtOne: return "ZeroAtOne";
    case ErrorCode::RetriesExhausted: return "RetriesExhausted";
    case ErrorCode::Unobservable: return "Unobservable";
    case ErrorCode::BadPoleSet: return "BadPoleSet";
    case ErrorCode::MinPhaseScope: return "MinPhaseScope";
    case ErrorCode::WindowNotReady: return "WindowNotReady";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SemanticError: return "SemanticError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace invfilt
