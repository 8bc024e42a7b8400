#pragma once

#include <stdexcept>
#include <string>

namespace sloth {

enum class ErrorKind {
  InvalidShape,
  ContractViolation,
  UnsupportedCharacter,
  InvalidTokenId,
  EmptyInput,
  ExhaustedPositions,
  DegenerateOutput,
  TrainingDiverged,
  UndefinedMetric,
  InsufficientData,
  MagicMismatch,
  DimensionMismatch,
  TruncatedFile,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sloth
