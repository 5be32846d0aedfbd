#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nmetro {

enum class ErrorCode {
  NonSquare,
  EntryOutOfRange,
  NotPositive,
  NotTransitive,
  InvalidDistribution,
  InvalidParameter,
  SamePair,
  AllCensored,
  ColumnNotStochastic,
  NegativeEntry,
  DimensionMismatch,
  NotErgodic,
  NotReversible,
  OutOfSupport,
  TailNotSummable,
  InfiniteExpectation,
  DiagonalNotNull,
  ZeroNormalizer,
  NonPositiveDeadline,
  ParseError,
  IoError,
  NumericalFailure,
};

std::string_view to_string(ErrorCode code);

// Validation errors are caller mistakes; numerical errors are properties of
// otherwise well-formed inputs (reducible chains, non-reversible matrices).
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nmetro
