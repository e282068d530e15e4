#include "logitdiff/backend/protocol.hpp"

#include <array>

#include "json_codec.hpp"

namespace logitdiff::protocol {
namespace {

using detail::json;
using detail::unsigned_from;
using detail::unsigned_list;

constexpr std::array<std::string_view, std::variant_size_v<Payload>> kKinds{
    "hello",          "logits_request", "logits_reply",   "activations_request", "activations_reply",
    "set_steering",   "clear_steering", "embed_request",  "embed_reply",         "classify_request",
    "classify_reply", "fold_request",   "fold_reply",     "error"};

template <std::size_t I = 0>
Payload make_payload(std::size_t index) {
  if constexpr (I < std::variant_size_v<Payload>) {
    if (index == I) return Payload(std::in_place_index<I>);
    return make_payload<I + 1>(index);
  } else {
    return Payload{};
  }
}

struct Encoder {
  json operator()(const Hello& p) const {
    json j{{"version", p.version}, {"client", p.client}};
    if (p.descriptor) j["descriptor"] = detail::descriptor_to_json(*p.descriptor);
    return j;
  }
  json operator()(const LogitsRequest& p) const { return {{"prefix", p.prefix}}; }
  json operator()(const LogitsReply& p) const { return {{"logits", p.logits}}; }
  json operator()(const ActivationsRequest& p) const { return {{"prefix", p.prefix}, {"layers", p.layers}}; }
  json operator()(const ActivationsReply& p) const {
    json layers = json::array();
    for (const auto& [layer, values] : p.layers) layers.push_back({{"layer", layer}, {"values", values}});
    return {{"layers", layers}};
  }
  json operator()(const SetSteering& p) const {
    json j = json::object();
    if (p.spec) j["spec"] = detail::steering_spec_to_json(*p.spec);
    return j;
  }
  json operator()(const ClearSteering&) const { return json::object(); }
  json operator()(const EmbedRequest& p) const { return {{"sequence", p.sequence}}; }
  json operator()(const EmbedReply& p) const { return {{"embedding", p.embedding}}; }
  json operator()(const ClassifyRequest& p) const { return {{"sequence", p.sequence}}; }
  json operator()(const ClassifyReply& p) const { return {{"label", p.label}, {"score", p.score}}; }
  json operator()(const FoldRequest& p) const { return {{"sequence", p.sequence}}; }
  json operator()(const FoldReply& p) const { return {{"mean_plddt", p.mean_plddt}, {"per_residue", p.per_residue}}; }
  json operator()(const ErrorReply& p) const {
    return {{"code", std::string(to_string(p.code))}, {"message", p.message}};
  }
};

struct Decoder {
  const json& j;
  void operator()(Hello& p) const {
    p.version = unsigned_from<std::uint32_t>(j.at("version"));
    p.client = j.value("client", std::string{});
    if (j.contains("descriptor")) p.descriptor = detail::descriptor_from_json(j.at("descriptor"));
  }
  void operator()(LogitsRequest& p) const { p.prefix = unsigned_list<TokenId>(j.at("prefix")); }
  void operator()(LogitsReply& p) const { p.logits = j.at("logits").get<std::vector<double>>(); }
  void operator()(ActivationsRequest& p) const {
    p.prefix = unsigned_list<TokenId>(j.at("prefix"));
    p.layers = unsigned_list<std::size_t>(j.at("layers"));
  }
  void operator()(ActivationsReply& p) const {
    for (const auto& entry : j.at("layers")) {
      p.layers[unsigned_from<std::size_t>(entry.at("layer"))] = entry.at("values").get<ActivationMatrix>();
    }
  }
  void operator()(SetSteering& p) const {
    if (j.contains("spec")) p.spec = detail::steering_spec_from_json(j.at("spec"));
  }
  void operator()(ClearSteering&) const {}
  void operator()(EmbedRequest& p) const { p.sequence = j.at("sequence").get<std::string>(); }
  void operator()(EmbedReply& p) const { p.embedding = j.at("embedding").get<std::vector<double>>(); }
  void operator()(ClassifyRequest& p) const { p.sequence = j.at("sequence").get<std::string>(); }
  void operator()(ClassifyReply& p) const {
    p.label = j.at("label").get<bool>();
    p.score = j.at("score").get<double>();
  }
  void operator()(FoldRequest& p) const { p.sequence = j.at("sequence").get<std::string>(); }
  void operator()(FoldReply& p) const {
    p.mean_plddt = j.at("mean_plddt").get<double>();
    p.per_residue = j.at("per_residue").get<std::vector<double>>();
  }
  void operator()(ErrorReply& p) const {
    p.code = error_code_from_string(j.at("code").get<std::string>());
    p.message = j.value("message", std::string{});
  }
};

}  // namespace

std::string_view kind_name(std::size_t variant_index) noexcept {
  return variant_index < kKinds.size() ? kKinds[variant_index] : std::string_view("error");
}

std::string_view Message::kind() const noexcept { return kind_name(payload.index()); }

std::string encode_body(const Message& message) {
  json j{{"id", message.id},
         {"session", message.session},
         {"kind", std::string(message.kind())},
         {"payload", std::visit(Encoder{}, message.payload)}};
  return j.dump();
}

Message decode_body(std::string_view body) {
  try {
    const json j = json::parse(body);
    Message m;
    if (!j.is_object() || !j.at("id").is_number_unsigned()) fail(ErrorCode::format, "message id must be unsigned");
    if (j.contains("session") && !j.at("session").is_number_unsigned()) {
      fail(ErrorCode::format, "session id must be unsigned");
    }
    m.id = j.at("id").get<std::uint64_t>();
    m.session = j.value("session", std::uint64_t{0});
    const auto kind = j.at("kind").get<std::string>();
    std::size_t index = kKinds.size();
    for (std::size_t i = 0; i < kKinds.size(); ++i) {
      if (kKinds[i] == kind) index = i;
    }
    if (index == kKinds.size()) fail(ErrorCode::format, "unknown message kind '" + kind + "'");
    m.payload = make_payload(index);
    const json& payload = j.contains("payload") ? j.at("payload") : json::object();
    std::visit(Decoder{payload}, m.payload);
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, std::string("malformed protocol message: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::format) throw;
    fail(ErrorCode::format, std::string("malformed protocol message: ") + e.what());
  }
}

std::string encode_frame(const Message& message) {
  const std::string body = encode_body(message);
  if (body.size() > kMaxFrameBytes) fail(ErrorCode::invalid_input, "protocol frame too large");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string frame;
  frame.reserve(4 + body.size());
  frame.push_back(static_cast<char>((n >> 24) & 0xFF));
  frame.push_back(static_cast<char>((n >> 16) & 0xFF));
  frame.push_back(static_cast<char>((n >> 8) & 0xFF));
  frame.push_back(static_cast<char>(n & 0xFF));
  frame += body;
  return frame;
}

void FrameDecoder::feed(std::string_view bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.append(bytes);
}

std::optional<std::string> FrameDecoder::next_body() {
  if (buffered() < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data() + offset_);
  const std::uint32_t n = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
                          std::uint32_t{p[3]};
  if (n > kMaxFrameBytes) {
    broken_ = true;
    fail(ErrorCode::format, "protocol frame length " + std::to_string(n) + " exceeds limit");
  }
  if (buffered() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::string body = buffer_.substr(offset_ + 4, n);
  offset_ += 4 + n;
  return body;
}

}  // namespace logitdiff::protocol
