#pragma once

// Randomised protocol messages for round-trip property tests.

#include <bit>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "logitdiff/backend/protocol.hpp"

namespace logitdiff::testing {

class MessageFactory {
 public:
  explicit MessageFactory(std::uint64_t seed) : gen_(seed) {}

  double real() {
    switch (pick(8)) {
      case 0:
        return std::uniform_real_distribution<double>(-1e3, 1e3)(gen_);
      case 1: {
        // Arbitrary finite bit pattern, denormals included.
        for (;;) {
          const double v = std::bit_cast<double>(gen_());
          if (std::isfinite(v)) return v;
        }
      }
      case 2:
        return pick(2) ? 0.0 : -0.0;
      case 3:
        return pick(2) ? std::numeric_limits<double>::max() : std::numeric_limits<double>::lowest();
      case 4:
        return std::numeric_limits<double>::denorm_min() * static_cast<double>(1 + pick(1000));
      case 5:
        return 0.1 * static_cast<double>(pick(100));
      case 6:
        return std::ldexp(std::uniform_real_distribution<double>(1.0, 2.0)(gen_), static_cast<int>(pick(2000)) - 1000);
      default:
        return static_cast<double>(static_cast<std::int64_t>(gen_()) >> pick(60));
    }
  }

  std::vector<double> reals(std::size_t max_len = 12) {
    std::vector<double> v(pick(max_len + 1));
    for (auto& x : v) x = real();
    return v;
  }

  // Valid UTF-8 with quotes, backslashes, control characters and
  // multi-byte code points.
  std::string text(std::size_t max_len = 16) {
    static const char32_t specials[] = {U'"', U'\\', U'\n', U'\t', U'\0', U'\x1f', U'/', U'é', U'−',
                                        U'±', U'\U0001F9EC', U'�'};
    std::string out;
    const std::size_t n = pick(max_len + 1);
    for (std::size_t i = 0; i < n; ++i) {
      char32_t c = pick(3) == 0 ? specials[pick(std::size(specials))] : static_cast<char32_t>(0x20 + pick(0x5f));
      append_utf8(out, c);
    }
    return out;
  }

  steering::SteeringSpec spec() {
    steering::SteeringSpec s;
    s.mode = static_cast<steering::Mode>(pick(3));
    s.alpha = real();
    switch (pick(3)) {
      case 0:
        s.layers = steering::LayerSelection::all_layers();
        break;
      case 1:
        s.layers = steering::LayerSelection::single(pick(64));
        break;
      default: {
        std::vector<std::size_t> ls(pick(4));
        for (auto& l : ls) l = pick(64);
        s.layers = steering::LayerSelection::of(ls);
      }
    }
    const std::size_t n = pick(3);
    const std::size_t d = 1 + pick(6);
    for (std::size_t i = 0; i < n; ++i) {
      steering::SteeringVector v;
      v.layer = pick(64);
      for (std::size_t j = 0; j < d; ++j) {
        v.r.push_back(real());
        v.mu_plus.push_back(real());
        v.mu_minus.push_back(real());
      }
      v.n_plus = pick(1000);
      v.n_minus = pick(1000);
      s.vectors.push_back(std::move(v));
    }
    return s;
  }

  BackendDescriptor descriptor() {
    BackendDescriptor d;
    d.id = "b" + text(8);
    for (int c = 0; c < 6; ++c) {
      if (pick(2)) d.capabilities.add(static_cast<Capability>(1 << c));
    }
    if (pick(2)) {
      std::vector<std::string> tokens;
      const std::size_t n = 2 + pick(6);
      for (std::size_t i = 0; i < n; ++i) tokens.push_back(fmt_token(i));
      SpecialTokens sp;
      sp.bos = static_cast<TokenId>(pick(n));
      if (pick(2)) sp.eos = static_cast<TokenId>(pick(n));
      if (pick(2)) sp.pad = static_cast<TokenId>(pick(n));
      d.vocabulary = Vocabulary(tokens, sp);
    }
    d.layer_count = pick(50);
    d.hidden_size = pick(5000);
    d.classify_threshold = std::uniform_real_distribution<double>(0, 1)(gen_);
    d.numeric_tolerance = pick(2) ? 0.0 : real();
    const std::size_t params = pick(3);
    for (std::size_t i = 0; i < params; ++i) d.parameters[text(6)] = text(10);
    return d;
  }

  protocol::Message message() {
    using namespace protocol;
    Message m;
    m.id = gen_();
    m.session = pick(2) ? gen_() : pick(4);
    switch (pick(14)) {
      case 0: {
        Hello h;
        h.version = static_cast<std::uint32_t>(gen_());
        h.client = text();
        if (pick(2)) h.descriptor = descriptor();
        m.payload = h;
        break;
      }
      case 1:
        m.payload = LogitsRequest{ids()};
        break;
      case 2:
        m.payload = LogitsReply{reals()};
        break;
      case 3: {
        ActivationsRequest r{ids(), {}};
        r.layers.resize(pick(4));
        for (auto& l : r.layers) l = pick(100);
        m.payload = r;
        break;
      }
      case 4: {
        ActivationsReply r;
        const std::size_t layers = pick(3);
        for (std::size_t l = 0; l < layers; ++l) {
          ActivationMatrix mat(pick(4));
          for (auto& row : mat) row = reals(5);
          r.layers[pick(100)] = mat;
        }
        m.payload = r;
        break;
      }
      case 5:
        m.payload = pick(2) ? SetSteering{spec()} : SetSteering{};
        break;
      case 6:
        m.payload = ClearSteering{};
        break;
      case 7:
        m.payload = EmbedRequest{text()};
        break;
      case 8:
        m.payload = EmbedReply{reals()};
        break;
      case 9:
        m.payload = ClassifyRequest{text()};
        break;
      case 10:
        m.payload = ClassifyReply{pick(2) == 1, real()};
        break;
      case 11:
        m.payload = FoldRequest{text()};
        break;
      case 12:
        m.payload = FoldReply{real(), reals()};
        break;
      default:
        m.payload = ErrorReply{static_cast<ErrorCode>(pick(14)), text(40)};
        break;
    }
    return m;
  }

  std::size_t pick(std::size_t bound) { return std::uniform_int_distribution<std::size_t>(0, bound - 1)(gen_); }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::vector<TokenId> ids() {
    std::vector<TokenId> v(pick(10));
    for (auto& x : v) x = static_cast<TokenId>(pick(2) ? pick(30) : gen_());
    return v;
  }

  static std::string fmt_token(std::size_t i) { return "t" + std::to_string(i); }

  static void append_utf8(std::string& out, char32_t c) {
    if (c < 0x80) {
      out += static_cast<char>(c);
    } else if (c < 0x800) {
      out += static_cast<char>(0xC0 | (c >> 6));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else if (c < 0x10000) {
      out += static_cast<char>(0xE0 | (c >> 12));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (c >> 18));
      out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }

  std::mt19937_64 gen_;
};

}  // namespace logitdiff::testing
