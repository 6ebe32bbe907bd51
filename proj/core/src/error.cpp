#include "dcekit/error.hpp"

namespace dce {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateChoice: return "DuplicateChoice";
    case ErrorCode::UnknownLevel: return "UnknownLevel";
    case ErrorCode::NonNumericContinuous: return "NonNumericContinuous";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::UnknownTrait: return "UnknownTrait";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidTruth: return "InvalidTruth";
    case ErrorCode::UnknownCoefficient: return "UnknownCoefficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::PriceCoefficientNearZero: return "PriceCoefficientNearZero";
    case ErrorCode::MissingMeans: return "MissingMeans";
    case ErrorCode::OutletMismatch: return "OutletMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotConverged:
    case ErrorCode::SingularHessian:
      return ErrorClass::Convergence;
    case ErrorCode::Io:
      return ErrorClass::Io;
    default:
      return ErrorClass::Validation;
  }
}

}  // namespace dce
