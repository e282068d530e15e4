#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace logitdiff {

// FNV-1a, 64-bit.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::span<const double> values, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (double v : values) {
    char raw[sizeof(double)];
    std::memcpy(raw, &v, sizeof(double));
    h = fnv1a64(std::string_view(raw, sizeof(double)), h);
  }
  return h;
}

}  // namespace logitdiff
