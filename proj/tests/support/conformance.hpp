#pragma once

// Protocol conformance suite shared by the unit tests and the acceptance
// gate. Every check reads the backend's declared capabilities and numeric
// tolerance, so the same suite applies to in-process, loopback and child
// process backends.

#include <cstdint>
#include <string>
#include <vector>

#include "logitdiff/backend/backend.hpp"

namespace logitdiff::testing {

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct ConformanceOptions {
  std::uint64_t seed = 2024;
  std::size_t prefixes = 16;
  std::size_t framing_messages = 10000;
};

std::vector<CheckResult> run_conformance(BackendProvider& provider, const ConformanceOptions& options = {});

// Encode/decode and frame-splitting identity over randomised messages of
// every kind, fed to the decoder in random chunk sizes.
CheckResult framing_round_trip(std::uint64_t seed, std::size_t count);

bool all_passed(const std::vector<CheckResult>& results);
std::string describe_failures(const std::vector<CheckResult>& results);

}  // namespace logitdiff::testing
