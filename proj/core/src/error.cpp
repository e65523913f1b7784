#include "privrisk/error.hpp"

namespace privrisk {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
      return "io-error";
    case ErrorCode::kParse:
      return "parse-error";
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kNotFound:
      return "not-found";
    case ErrorCode::kShapeMismatch:
      return "shape-mismatch";
    case ErrorCode::kConflict:
      return "conflict";
    case ErrorCode::kStateMismatch:
      return "state-mismatch";
    case ErrorCode::kMissingState:
      return "missing-state";
  }
  return "unknown";
}

}  // namespace privrisk
