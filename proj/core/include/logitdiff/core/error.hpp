#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace logitdiff {

// Machine-readable failure categories. The wire protocol carries these as
// their snake_case names (see to_string / error_code_from_string).
enum class ErrorCode {
  invalid_parameter,
  invalid_input,
  unsupported_capability,
  connection,
  backend,
  degenerate_direction,
  degenerate_labels,
  insufficient_samples,
  numerical_failure,
  cannot_split,
  config,
  data,
  format,
  no_data,
};

std::string_view to_string(ErrorCode code) noexcept;
ErrorCode error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) throw Error(code, message);
}

}  // namespace logitdiff
