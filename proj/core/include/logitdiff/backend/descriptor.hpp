#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logitdiff/core/vocabulary.hpp"

namespace logitdiff {

enum class Capability : std::uint8_t {
  logits = 1U << 0,
  activations = 1U << 1,
  steering = 1U << 2,
  embeddings = 1U << 3,
  classify = 1U << 4,
  fold_confidence = 1U << 5,
};

std::string_view to_string(Capability c) noexcept;
Capability capability_from_string(std::string_view name);

class CapabilitySet {
 public:
  constexpr CapabilitySet() = default;
  constexpr CapabilitySet(std::initializer_list<Capability> caps) {
    for (auto c : caps) bits_ |= static_cast<std::uint8_t>(c);
  }

  constexpr bool has(Capability c) const noexcept { return (bits_ & static_cast<std::uint8_t>(c)) != 0; }
  constexpr void add(Capability c) noexcept { bits_ |= static_cast<std::uint8_t>(c); }
  std::vector<Capability> list() const;

  friend constexpr bool operator==(CapabilitySet, CapabilitySet) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct BackendDescriptor {
  std::string id;
  CapabilitySet capabilities;
  // Present whenever the backend accepts token-id prefixes (logits or
  // activations).
  std::optional<Vocabulary> vocabulary;
  std::size_t layer_count = 0;
  std::size_t hidden_size = 0;
  double classify_threshold = 0.5;
  // 0 for bit-exact backends; sidecars wrapping accelerators declare > 0.
  double numeric_tolerance = 0.0;
  // Free-form declared parameters (e.g. "pooling" for embeddings).
  std::map<std::string, std::string> parameters;

  bool has(Capability c) const noexcept { return capabilities.has(c); }
  // invalid_parameter on violated descriptor invariants.
  void validate() const;

  friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

}  // namespace logitdiff
