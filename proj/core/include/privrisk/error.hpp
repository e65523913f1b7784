#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace privrisk {

enum class ErrorCode {
  kIo,
  kParse,
  kInvalidArgument,
  kNotFound,
  kShapeMismatch,
  kConflict,
  kStateMismatch,
  kMissingState,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the library. The code drives CLI exit codes
// and HTTP status mapping; `line` is set for parse errors in line-oriented
// files; `suggestions` carries nearest-name hints for unresolved attributes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Error(ErrorCode code, const std::string& message, std::size_t line)
      : std::runtime_error(message), code_(code), line_(line) {}

  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> suggestions)
      : std::runtime_error(message),
        code_(code),
        suggestions_(std::move(suggestions)) {}

  ErrorCode code() const noexcept { return code_; }
  // 1-based line number, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }
  const std::vector<std::string>& suggestions() const noexcept {
    return suggestions_;
  }

 private:
  ErrorCode code_;
  std::size_t line_ = 0;
  std::vector<std::string> suggestions_;
};

}  // namespace privrisk
