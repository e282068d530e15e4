#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "logitdiff/backend/backend.hpp"
#include "logitdiff/core/error.hpp"

namespace logitdiff::protocol {

inline constexpr std::uint32_t kProtocolVersion = 1;
// Frames larger than this are rejected as corrupt.
inline constexpr std::uint32_t kMaxFrameBytes = 256U << 20;

// hello travels both ways: the request names the client, the reply carries
// the backend descriptor and (in the envelope) the new session id.
struct Hello {
  std::uint32_t version = kProtocolVersion;
  std::string client;
  std::optional<BackendDescriptor> descriptor;
  friend bool operator==(const Hello&, const Hello&) = default;
};
struct LogitsRequest {
  std::vector<TokenId> prefix;
  friend bool operator==(const LogitsRequest&, const LogitsRequest&) = default;
};
struct LogitsReply {
  std::vector<double> logits;
  friend bool operator==(const LogitsReply&, const LogitsReply&) = default;
};
struct ActivationsRequest {
  std::vector<TokenId> prefix;
  std::vector<std::size_t> layers;
  friend bool operator==(const ActivationsRequest&, const ActivationsRequest&) = default;
};
struct ActivationsReply {
  ActivationMap layers;
  friend bool operator==(const ActivationsReply&, const ActivationsReply&) = default;
};
// Request carries the spec; the acknowledgement echoes the kind without one.
struct SetSteering {
  std::optional<steering::SteeringSpec> spec;
  friend bool operator==(const SetSteering&, const SetSteering&) = default;
};
struct ClearSteering {
  friend bool operator==(const ClearSteering&, const ClearSteering&) = default;
};
struct EmbedRequest {
  std::string sequence;
  friend bool operator==(const EmbedRequest&, const EmbedRequest&) = default;
};
struct EmbedReply {
  std::vector<double> embedding;
  friend bool operator==(const EmbedReply&, const EmbedReply&) = default;
};
struct ClassifyRequest {
  std::string sequence;
  friend bool operator==(const ClassifyRequest&, const ClassifyRequest&) = default;
};
struct ClassifyReply {
  bool label = false;
  double score = 0.0;
  friend bool operator==(const ClassifyReply&, const ClassifyReply&) = default;
};
struct FoldRequest {
  std::string sequence;
  friend bool operator==(const FoldRequest&, const FoldRequest&) = default;
};
struct FoldReply {
  double mean_plddt = 0.0;
  std::vector<double> per_residue;
  friend bool operator==(const FoldReply&, const FoldReply&) = default;
};
struct ErrorReply {
  ErrorCode code = ErrorCode::backend;
  std::string message;
  friend bool operator==(const ErrorReply&, const ErrorReply&) = default;
};

// Alternative order matches the kind names in kind_name().
using Payload = std::variant<Hello, LogitsRequest, LogitsReply, ActivationsRequest, ActivationsReply, SetSteering,
                             ClearSteering, EmbedRequest, EmbedReply, ClassifyRequest, ClassifyReply, FoldRequest,
                             FoldReply, ErrorReply>;

struct Message {
  std::uint64_t id = 0;
  std::uint64_t session = 0;
  Payload payload;

  std::string_view kind() const noexcept;
  friend bool operator==(const Message&, const Message&) = default;
};

std::string_view kind_name(std::size_t variant_index) noexcept;

// JSON body (UTF-8). Doubles are written as the shortest decimal that
// round-trips exactly.
std::string encode_body(const Message& message);
// format error on malformed bodies.
Message decode_body(std::string_view body);

// 4-byte big-endian body length followed by the body.
std::string encode_frame(const Message& message);

// Incremental frame splitter for byte streams.
class FrameDecoder {
 public:
  void feed(std::string_view bytes);
  // Next complete body, if one is buffered.
  std::optional<std::string> next_body();
  std::size_t buffered() const noexcept { return buffer_.size() - offset_; }
  // After an over-limit length header the stream cannot be resynchronised.
  bool broken() const noexcept { return broken_; }

 private:
  std::string buffer_;
  std::size_t offset_ = 0;
  bool broken_ = false;
};

}  // namespace logitdiff::protocol
