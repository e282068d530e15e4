#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "logitdiff/backend/backend.hpp"
#include "logitdiff/backend/transport.hpp"

namespace logitdiff {

// Client side of the wire protocol. One connection is shared by every
// session opened through the provider; calls are serialized on it.
class RemoteConnection {
 public:
  // "cmd:<shell command>", "unix:/path" or "tcp:host:port".
  static std::shared_ptr<RemoteConnection> open(const std::string& address);
  // Wraps an existing channel (used by tests over socketpairs).
  explicit RemoteConnection(protocol::Channel channel, std::string address = "channel");
  explicit RemoteConnection(std::unique_ptr<protocol::ChildProcess> child, std::string address);

  // Sends the request and returns the matching reply. Error replies are
  // rethrown as Error with the backend's code; a reply with the wrong id or
  // a dead transport raises ErrorCode::connection.
  protocol::Message call(std::uint64_t session, protocol::Payload payload);

  const std::string& address() const noexcept { return address_; }

 private:
  std::mutex mutex_;
  std::unique_ptr<protocol::ChildProcess> child_;
  std::optional<protocol::Channel> owned_;
  protocol::Channel* channel_ = nullptr;
  std::uint64_t next_id_ = 1;
  std::string address_;
};

class RemoteProvider final : public BackendProvider {
 public:
  explicit RemoteProvider(std::shared_ptr<RemoteConnection> connection);

  std::unique_ptr<Backend> open_session() override;
  const BackendDescriptor& descriptor() override;

 private:
  std::shared_ptr<RemoteConnection> connection_;
  std::optional<BackendDescriptor> descriptor_;
  std::mutex mutex_;
};

}  // namespace logitdiff
