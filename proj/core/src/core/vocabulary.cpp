#include "logitdiff/core/vocabulary.hpp"

#include <algorithm>

#include "logitdiff/core/error.hpp"

namespace logitdiff {

Vocabulary::Vocabulary(std::vector<std::string> tokens, SpecialTokens specials)
    : tokens_(std::move(tokens)), specials_(specials) {
  if (tokens_.size() < 2) fail(ErrorCode::invalid_input, "vocabulary needs at least two tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) fail(ErrorCode::invalid_input, "empty token string at index " + std::to_string(i));
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) fail(ErrorCode::invalid_input, "duplicate token '" + tokens_[i] + "'");
    longest_ = std::max(longest_, tokens_[i].size());
  }
  auto check = [&](std::optional<TokenId> id, const char* what) {
    if (id && *id >= tokens_.size()) {
      fail(ErrorCode::invalid_input, std::string(what) + " id out of range");
    }
  };
  check(specials_.bos, "begin-of-sequence");
  check(specials_.eos, "end-of-sequence");
  check(specials_.pad, "pad");
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) fail(ErrorCode::invalid_input, "token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::is_marker(TokenId id) const {
  const bool special = id == specials_.bos || id == specials_.eos || id == specials_.pad;
  return special && token(id).front() == '<';
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (!is_marker(id)) out += token(id);
  }
  return out;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    bool matched = false;
    for (std::size_t len = std::min(longest_, text.size() - pos); len > 0; --len) {
      auto it = index_.find(std::string(text.substr(pos, len)));
      if (it != index_.end() && !is_marker(it->second)) {
        ids.push_back(it->second);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      fail(ErrorCode::invalid_input, "cannot tokenize text at offset " + std::to_string(pos));
    }
  }
  return ids;
}

}  // namespace logitdiff
