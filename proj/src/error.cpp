#include "nmetro/error.hpp"

namespace nmetro {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::EntryOutOfRange: return "EntryOutOfRange";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::NotTransitive: return "NotTransitive";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::SamePair: return "SamePair";
    case ErrorCode::AllCensored: return "AllCensored";
    case ErrorCode::ColumnNotStochastic: return "ColumnNotStochastic";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotErgodic: return "NotErgodic";
    case ErrorCode::NotReversible: return "NotReversible";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::TailNotSummable: return "TailNotSummable";
    case ErrorCode::InfiniteExpectation: return "InfiniteExpectation";
    case ErrorCode::DiagonalNotNull: return "DiagonalNotNull";
    case ErrorCode::ZeroNormalizer: return "ZeroNormalizer";
    case ErrorCode::NonPositiveDeadline: return "NonPositiveDeadline";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotErgodic:
    case ErrorCode::NotReversible:
    case ErrorCode::NumericalFailure:
    case ErrorCode::ZeroNormalizer:
      return true;
    default:
      return false;
  }
}

}  // namespace nmetro
