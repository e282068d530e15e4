#include "logitdiff/core/sequence.hpp"

#include <cmath>

#include "logitdiff/core/error.hpp"
#include "logitdiff/core/logits.hpp"

namespace logitdiff {

Sequence::Sequence(std::vector<TokenId> ids, Provenance provenance)
    : ids_(std::move(ids)), provenance_(std::move(provenance)) {
  if (ids_.empty()) fail(ErrorCode::invalid_input, "sequence must be nonempty");
}

void Sequence::validate(const Vocabulary& vocab) const {
  if (ids_.empty()) fail(ErrorCode::invalid_input, "sequence must be nonempty");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] >= vocab.size()) {
      fail(ErrorCode::invalid_input, "token id " + std::to_string(ids_[i]) + " at position " +
                                         std::to_string(i) + " exceeds vocabulary size " +
                                         std::to_string(vocab.size()));
    }
    if (vocab.eos() && ids_[i] == *vocab.eos() && i + 1 != ids_.size()) {
      fail(ErrorCode::invalid_input, "end-of-sequence token before the final position");
    }
  }
}

LogitVector::LogitVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorCode::invalid_input, "non-finite logit at index " + std::to_string(i));
    }
  }
}

}  // namespace logitdiff
