#pragma once

#include "logitdiff/core/logits.hpp"

namespace logitdiff::decode {

// Logit-diff amplification: baseline + alpha * (baseline - concept),
// evaluated in exactly that order. alpha = 0 or baseline == concept returns
// the baseline bit-for-bit; alpha > 0 steers away from the concept model.
LogitVector lda_combine(const LogitVector& baseline, const LogitVector& concept_logits, double alpha);

}  // namespace logitdiff::decode
