#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <string>

#include "logitdiff/backend/backend.hpp"
#include "logitdiff/backend/transport.hpp"

namespace logitdiff::protocol {

// Serves one backend model. Each connection owns the sessions it opened
// with hello; requests on a connection are answered strictly in order.
class Server {
 public:
  explicit Server(std::shared_ptr<BackendProvider> provider);

  class Connection {
   public:
    explicit Connection(Server& server) : server_(server) {}
    // Never throws for request-level failures; they become error replies.
    Message handle(const Message& request);

   private:
    Server& server_;
    std::map<std::uint64_t, std::unique_ptr<Backend>> sessions_;
  };

  // Runs until the peer closes the stream.
  void serve(Channel& channel);

  // "stdio", "unix:/path", or "tcp:host:port". Socket listeners accept
  // connections until the process is terminated; each runs on its own thread.
  void listen(const std::string& address);

 private:
  std::shared_ptr<BackendProvider> provider_;
  std::atomic<std::uint64_t> next_session_{1};
};

}  // namespace logitdiff::protocol
