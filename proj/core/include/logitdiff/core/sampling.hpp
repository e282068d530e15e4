#pragma once

#include <span>
#include <vector>

#include "logitdiff/core/logits.hpp"
#include "logitdiff/core/rng.hpp"
#include "logitdiff/core/vocabulary.hpp"

namespace logitdiff {

// softmax(logits / tau). The division happens first, so softmax(l, t) and
// softmax(l / t, 1) are the same computation. Max-subtracted; never overflows
// for finite input.
std::vector<double> softmax(const LogitVector& logits, double tau = 1.0);

// log softmax(logits / tau), same stabilisation as softmax().
std::vector<double> log_softmax(const LogitVector& logits, double tau = 1.0);

// Inverse-CDF draw: one uniform u = rng.next_double(), returns the first i
// whose running sum exceeds u. Entries with zero probability are never
// returned. probs must sum to 1 within 1e-9.
TokenId sample_token(std::span<const double> probs, RngState& rng);

// exp(-(1/L) * sum ln p_t) over the scored positions (every position after
// the begin token).
double perplexity(std::span<const double> stepwise_probs);
double perplexity_from_log_probs(std::span<const double> log_probs);

}  // namespace logitdiff
