#pragma once

#include <stdexcept>
#include <string>

namespace wagmf {

enum class ErrorKind {
  DimMismatch,
  NegativeRadicand,
  NonFiniteGradient,
  NonFiniteInput,
  InvalidMetric,
  InvalidSet,
  InvalidConfig,
  WeightOverflow,
  UnknownPreset,
  InvalidOverride,
  ShapeMismatch,
  ParseError,
  LabelOutOfRange,
  MagicMismatch,
  MissingBranchRecord,
  UnboundedSet,
  LambdaOne,
  DomainViolation,
  InsufficientSeeds,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::NegativeRadicand: return "NegativeRadicand";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::InvalidMetric: return "InvalidMetric";
    case ErrorKind::InvalidSet: return "InvalidSet";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::WeightOverflow: return "WeightOverflow";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::InvalidOverride: return "InvalidOverride";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::MagicMismatch: return "MagicMismatch";
    case ErrorKind::MissingBranchRecord: return "MissingBranchRecord";
    case ErrorKind::UnboundedSet: return "UnboundedSet";
    case ErrorKind::LambdaOne: return "LambdaOne";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::InsufficientSeeds: return "InsufficientSeeds";
  }
  return "Unknown";
}

}  // namespace wagmf
