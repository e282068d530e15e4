#include "logitdiff/backend/remote.hpp"

namespace logitdiff {
namespace {

using namespace protocol;

template <typename Reply>
Reply expect(Message&& m) {
  if (auto* r = std::get_if<Reply>(&m.payload)) return std::move(*r);
  fail(ErrorCode::connection, "unexpected '" + std::string(m.kind()) + "' reply");
}

class RemoteSession final : public Backend {
 public:
  RemoteSession(std::shared_ptr<RemoteConnection> conn, std::uint64_t session, BackendDescriptor d)
      : conn_(std::move(conn)), session_(session), descriptor_(std::move(d)) {}

  const BackendDescriptor& descriptor() const override { return descriptor_; }

 protected:
  LogitVector do_next_logits(const Sequence& prefix) override {
    return LogitVector(expect<LogitsReply>(conn_->call(session_, LogitsRequest{prefix.ids()})).logits);
  }
  ActivationMap do_activations(const Sequence& prefix, std::span<const std::size_t> layers) override {
    ActivationsRequest req{prefix.ids(), std::vector<std::size_t>(layers.begin(), layers.end())};
    return expect<ActivationsReply>(conn_->call(session_, std::move(req))).layers;
  }
  void do_set_steering(const steering::SteeringSpec& spec) override {
    expect<SetSteering>(conn_->call(session_, SetSteering{spec}));
  }
  void do_clear_steering() override { expect<ClearSteering>(conn_->call(session_, ClearSteering{})); }
  std::vector<double> do_embed(std::string_view text) override {
    return expect<EmbedReply>(conn_->call(session_, EmbedRequest{std::string(text)})).embedding;
  }
  Classification do_classify(std::string_view text) override {
    const auto r = expect<ClassifyReply>(conn_->call(session_, ClassifyRequest{std::string(text)}));
    return {r.label, r.score};
  }
  FoldConfidence do_fold_confidence(std::string_view text) override {
    auto r = expect<FoldReply>(conn_->call(session_, FoldRequest{std::string(text)}));
    return {r.mean_plddt, std::move(r.per_residue)};
  }

 private:
  std::shared_ptr<RemoteConnection> conn_;
  std::uint64_t session_;
  BackendDescriptor descriptor_;
};

}  // namespace

std::shared_ptr<RemoteConnection> RemoteConnection::open(const std::string& address) {
  if (address.starts_with("cmd:")) {
    return std::make_shared<RemoteConnection>(std::make_unique<ChildProcess>(address.substr(4)), address);
  }
  return std::make_shared<RemoteConnection>(connect_socket(address), address);
}

RemoteConnection::RemoteConnection(Channel channel, std::string address)
    : owned_(std::move(channel)), address_(std::move(address)) {
  channel_ = &*owned_;
}

RemoteConnection::RemoteConnection(std::unique_ptr<ChildProcess> child, std::string address)
    : child_(std::move(child)), address_(std::move(address)) {
  channel_ = &child_->channel();
}

Message RemoteConnection::call(std::uint64_t session, Payload payload) {
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  channel_->send(Message{id, session, std::move(payload)});
  auto reply = channel_->receive();
  if (!reply) fail(ErrorCode::connection, address_ + ": backend closed the connection");
  if (auto* err = std::get_if<ErrorReply>(&reply->payload)) {
    if (reply->id == id || reply->id == 0) throw Error(err->code, address_ + ": " + err->message);
  }
  if (reply->id != id) {
    fail(ErrorCode::connection, address_ + ": reply id " + std::to_string(reply->id) + " does not match request " +
                                    std::to_string(id));
  }
  return std::move(*reply);
}

RemoteProvider::RemoteProvider(std::shared_ptr<RemoteConnection> connection) : connection_(std::move(connection)) {}

std::unique_ptr<Backend> RemoteProvider::open_session() {
  auto reply = connection_->call(0, Hello{kProtocolVersion, "logitdiff", std::nullopt});
  auto hello = expect<Hello>(std::move(reply));
  if (!hello.descriptor) fail(ErrorCode::connection, connection_->address() + ": hello reply without descriptor");
  hello.descriptor->validate();
  {
    std::lock_guard lock(mutex_);
    if (!descriptor_) descriptor_ = *hello.descriptor;
  }
  return std::make_unique<RemoteSession>(connection_, reply.session, std::move(*hello.descriptor));
}

const BackendDescriptor& RemoteProvider::descriptor() {
  {
    std::lock_guard lock(mutex_);
    if (descriptor_) return *descriptor_;
  }
  open_session();
  return *descriptor_;
}

}  // namespace logitdiff
