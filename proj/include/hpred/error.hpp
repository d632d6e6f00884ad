#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hpred {

enum class ErrorCode {
  OutOfCorridor,
  OffPathEnd,
  NoIntersection,
  InvalidPath,
  EmptySequence,
  ShapeMismatch,
  DatasetTooSmall,
  LengthMismatch,
  NonFiniteCost,
  SingularHessian,
  Diverged,
  InsufficientHistory,
  NoSatisfiedSamples,
  InfeasibleSpec,
  InvalidArgument,
  SchemaError,
  ConfigError,
  ModelNotFound,
  InputNotFound,
  IoError,
};

/// Upper-snake category name, used verbatim in CLI error lines.
std::string_view category_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hpred
