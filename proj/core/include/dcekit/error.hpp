#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dce {

enum class ErrorCode {
  // core-data
  MissingColumn,
  DuplicateChoice,
  UnknownLevel,
  NonNumericContinuous,
  InvalidDataset,
  UnknownTrait,
  EmptyDataset,
  // design / simulation
  InvalidConfig,
  InvalidTruth,
  // estimation
  UnknownCoefficient,
  DimensionMismatch,
  DegenerateData,
  SingularHessian,
  NotConverged,
  DimensionTooLarge,
  // welfare / potential
  PriceCoefficientNearZero,
  MissingMeans,
  OutletMismatch,
  // plumbing
  ParseError,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Broad class of an error, used by the CLI to pick an exit status.
enum class ErrorClass { Validation, Convergence, Io };

ErrorClass classify(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dce
