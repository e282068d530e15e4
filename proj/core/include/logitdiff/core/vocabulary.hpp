#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace logitdiff {

using TokenId = std::uint32_t;

struct SpecialTokens {
  TokenId bos = 0;
  std::optional<TokenId> eos;
  std::optional<TokenId> pad;
};

// Ordered, immutable token table. The begin-of-sequence id may be an ordinary
// token (toy vocabularies) or a dedicated special token.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, SpecialTokens specials);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const SpecialTokens& specials() const noexcept { return specials_; }
  TokenId bos() const noexcept { return specials_.bos; }
  std::optional<TokenId> eos() const noexcept { return specials_.eos; }
  std::optional<TokenId> pad() const noexcept { return specials_.pad; }

  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(TokenId id) const noexcept { return id < tokens_.size(); }

  // True for bos/eos/pad when they are dedicated markers rather than
  // residue tokens (i.e. their string starts with '<').
  bool is_marker(TokenId id) const;

  // Concatenates token strings, skipping marker tokens.
  std::string decode(std::span<const TokenId> ids) const;
  // Greedy longest-match tokenization of residue text (no markers added).
  std::vector<TokenId> encode(std::string_view text) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.specials_.bos == b.specials_.bos &&
           a.specials_.eos == b.specials_.eos && a.specials_.pad == b.specials_.pad;
  }

 private:
  std::vector<std::string> tokens_;
  SpecialTokens specials_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t longest_ = 0;
};

}  // namespace logitdiff
