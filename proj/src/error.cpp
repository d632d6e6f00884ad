#include "hpred/error.hpp"

namespace hpred {

std::string_view category_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfCorridor: return "OUT_OF_CORRIDOR";
    case ErrorCode::OffPathEnd: return "OFF_PATH_END";
    case ErrorCode::NoIntersection: return "NO_INTERSECTION";
    case ErrorCode::InvalidPath: return "INVALID_PATH";
    case ErrorCode::EmptySequence: return "EMPTY_SEQUENCE";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::DatasetTooSmall: return "DATASET_TOO_SMALL";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::NonFiniteCost: return "NON_FINITE_COST";
    case ErrorCode::SingularHessian: return "SINGULAR_HESSIAN";
    case ErrorCode::Diverged: return "DIVERGED";
    case ErrorCode::InsufficientHistory: return "INSUFFICIENT_HISTORY";
    case ErrorCode::NoSatisfiedSamples: return "NO_SATISFIED_SAMPLES";
    case ErrorCode::InfeasibleSpec: return "INFEASIBLE_SPEC";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::SchemaError: return "SCHEMA_ERROR";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::ModelNotFound: return "MODEL_NOT_FOUND";
    case ErrorCode::InputNotFound: return "INPUT_NOT_FOUND";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace hpred
