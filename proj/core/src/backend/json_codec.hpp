#pragma once

#include <limits>
#include <vector>

#include "json.hpp"
#include "logitdiff/core/error.hpp"
#include "logitdiff/backend/descriptor.hpp"
#include "logitdiff/steering/steering.hpp"

namespace logitdiff::detail {

using json = nlohmann::json;

// Unsigned integer field; negative, fractional or oversized values are format
// errors instead of silently wrapping.
template <class T>
T unsigned_from(const json& j) {
  if (!j.is_number_unsigned() || j.get<std::uint64_t>() > std::numeric_limits<T>::max()) {
    fail(ErrorCode::format, "expected a non-negative integer, got " + j.dump());
  }
  return static_cast<T>(j.get<std::uint64_t>());
}

template <class T>
std::vector<T> unsigned_list(const json& j) {
  if (!j.is_array()) fail(ErrorCode::format, "expected an array of non-negative integers");
  std::vector<T> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(unsigned_from<T>(e));
  return out;
}

json vocabulary_to_json(const Vocabulary& v);
Vocabulary vocabulary_from_json(const json& j);

json descriptor_to_json(const BackendDescriptor& d);
BackendDescriptor descriptor_from_json(const json& j);

json steering_vector_to_json(const steering::SteeringVector& v);
steering::SteeringVector steering_vector_from_json(const json& j);

json steering_spec_to_json(const steering::SteeringSpec& s);
steering::SteeringSpec steering_spec_from_json(const json& j);

}  // namespace logitdiff::detail
