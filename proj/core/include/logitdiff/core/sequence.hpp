#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "logitdiff/core/vocabulary.hpp"

namespace logitdiff {

struct Provenance {
  std::string id;
  std::string backend;
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
  std::uint64_t index = 0;  // position within its run
};

// Token ids starting with the begin token. Validity against a particular
// vocabulary is checked by validate(); the type itself only guarantees
// non-emptiness.
class Sequence {
 public:
  Sequence() = default;
  explicit Sequence(std::vector<TokenId> ids, Provenance provenance = {});

  const std::vector<TokenId>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  TokenId back() const { return ids_.back(); }
  const Provenance& provenance() const noexcept { return provenance_; }
  Provenance& provenance() noexcept { return provenance_; }

  // Tokens after the begin token.
  std::size_t generated_length() const noexcept { return ids_.empty() ? 0 : ids_.size() - 1; }

  void push_back(TokenId id) { ids_.push_back(id); }

  // Throws invalid_input unless every id is in range, the sequence is
  // nonempty, and an end token (if any) is the final element.
  void validate(const Vocabulary& vocab) const;

  friend bool operator==(const Sequence& a, const Sequence& b) { return a.ids_ == b.ids_; }

 private:
  std::vector<TokenId> ids_;
  Provenance provenance_;
};

}  // namespace logitdiff
