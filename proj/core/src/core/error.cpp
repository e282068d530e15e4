#include "logitdiff/core/error.hpp"

#include <array>
#include <utility>

namespace logitdiff {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 14> kNames{{
    {ErrorCode::invalid_parameter, "invalid_parameter"},
    {ErrorCode::invalid_input, "invalid_input"},
    {ErrorCode::unsupported_capability, "unsupported_capability"},
    {ErrorCode::connection, "connection"},
    {ErrorCode::backend, "backend"},
    {ErrorCode::degenerate_direction, "degenerate_direction"},
    {ErrorCode::degenerate_labels, "degenerate_labels"},
    {ErrorCode::insufficient_samples, "insufficient_samples"},
    {ErrorCode::numerical_failure, "numerical_failure"},
    {ErrorCode::cannot_split, "cannot_split"},
    {ErrorCode::config, "config"},
    {ErrorCode::data, "data"},
    {ErrorCode::format, "format"},
    {ErrorCode::no_data, "no_data"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "backend";
}

ErrorCode error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  // Unknown codes from a foreign backend are still backend-side failures.
  return ErrorCode::backend;
}

}  // namespace logitdiff
