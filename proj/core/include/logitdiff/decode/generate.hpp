#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "logitdiff/backend/backend.hpp"
#include "logitdiff/core/rng.hpp"
#include "logitdiff/core/sequence.hpp"
#include "logitdiff/steering/steering.hpp"

namespace logitdiff::decode {

struct SamplingConfig {
  double tau = 1.0;
  // Cap on generated tokens (the begin token is not counted).
  std::size_t max_length = 512;
};

// Draws one sequence token by token starting from the begin token. With a
// concept session every step queries both sessions on the same prefix,
// combines with lda_combine, then applies softmax(., tau) and sample_token.
// Without one it samples the baseline alone; at alpha = 0 the two paths
// produce identical sequences for the same rng.
Sequence sample_sequence(Backend& baseline, Backend* concept_session, double alpha, const SamplingConfig& sampling,
                         RngState& rng);

// log p(token_t | prefix_<t) under `reference` at temperature 1 for every
// position after the begin token.
std::vector<double> score_log_probs(Backend& reference, const Sequence& seq);

struct GenerationRecord {
  Sequence sequence;
  std::vector<double> reference_log_probs;
  double perplexity = 0.0;
  std::uint64_t run = 0;
  std::uint64_t index = 0;
};

struct GenerationConfig {
  BackendProvider* baseline = nullptr;
  BackendProvider* concept_model = nullptr;  // LDA when set
  double alpha = 0.0;
  BackendProvider* reference = nullptr;  // defaults to baseline
  std::optional<steering::SteeringSpec> steering;  // installed on every baseline session
  SamplingConfig sampling;
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
  std::size_t count = 1;
  std::size_t workers = 1;
  double max_failure_fraction = 0.10;
};

struct GenerationBatch {
  std::vector<GenerationRecord> records;  // successful ones, ordered by index
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
};

// Sequence i of run r draws from RngState(seed, stream_for(r, i)) on its own
// sessions, so results do not depend on worker count or completion order.
// Records whose backend calls fail are dropped and counted; more than
// max_failure_fraction failures raises the first failure's error.
GenerationBatch generate(const GenerationConfig& config);

constexpr std::uint64_t stream_for(std::uint64_t run, std::uint64_t index) noexcept { return (run << 32) | index; }

// The k records with the smallest perplexity, ordered by (perplexity,
// token ids lexicographically, run, index). invalid_parameter if k exceeds
// the record count.
std::vector<GenerationRecord> filter_lowest_perplexity(std::vector<GenerationRecord> records, std::size_t k);

}  // namespace logitdiff::decode
