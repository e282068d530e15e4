#pragma once

// Serves a provider over a socketpair on a background thread and exposes
// the client side as a RemoteProvider.

#include <sys/socket.h>

#include <memory>
#include <stdexcept>
#include <thread>

#include "logitdiff/backend/remote.hpp"
#include "logitdiff/backend/server.hpp"

namespace logitdiff::testing {

class Loopback {
 public:
  explicit Loopback(std::shared_ptr<BackendProvider> served) : server_(std::move(served)) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) throw std::runtime_error("socketpair failed");
    thread_ = std::thread([this, fd = fds[1]] {
      protocol::Channel channel(fd, fd, true);
      server_.serve(channel);
    });
    connection_ = std::make_shared<RemoteConnection>(protocol::Channel(fds[0], fds[0], true), "loopback");
    provider_ = std::make_shared<RemoteProvider>(connection_);
  }

  ~Loopback() {
    provider_.reset();
    connection_.reset();
    if (thread_.joinable()) thread_.join();
  }

  Loopback(const Loopback&) = delete;
  Loopback& operator=(const Loopback&) = delete;

  BackendProvider& provider() { return *provider_; }
  std::shared_ptr<BackendProvider> shared() { return provider_; }
  RemoteConnection& connection() { return *connection_; }

 private:
  protocol::Server server_;
  std::thread thread_;
  std::shared_ptr<RemoteConnection> connection_;
  std::shared_ptr<RemoteProvider> provider_;
};

}  // namespace logitdiff::testing
