#include "logitdiff/backend/server.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace logitdiff::protocol {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Message reply_to(const Message& request, Payload payload) {
  return Message{request.id, request.session, std::move(payload)};
}

Sequence prefix_of(const std::vector<TokenId>& ids) {
  if (ids.empty()) fail(ErrorCode::invalid_input, "empty prefix");
  return Sequence(ids);
}

}  // namespace

Server::Server(std::shared_ptr<BackendProvider> provider) : provider_(std::move(provider)) {}

Message Server::Connection::handle(const Message& request) {
  try {
    if (const auto* hello = std::get_if<Hello>(&request.payload)) {
      if (hello->version != kProtocolVersion) {
        fail(ErrorCode::invalid_parameter, "unsupported protocol version " + std::to_string(hello->version));
      }
      auto session = server_.provider_->open_session();
      const std::uint64_t sid = server_.next_session_++;
      Hello out;
      out.client = hello->client;
      out.descriptor = session->descriptor();
      sessions_[sid] = std::move(session);
      return Message{request.id, sid, std::move(out)};
    }
    auto it = sessions_.find(request.session);
    if (it == sessions_.end()) {
      fail(ErrorCode::invalid_parameter, "unknown session " + std::to_string(request.session));
    }
    Backend& b = *it->second;
    return std::visit(
        overloaded{
            [&](const LogitsRequest& r) -> Message {
              return reply_to(request, LogitsReply{b.next_logits(prefix_of(r.prefix)).vector()});
            },
            [&](const ActivationsRequest& r) -> Message {
              return reply_to(request, ActivationsReply{b.activations(prefix_of(r.prefix), r.layers)});
            },
            [&](const SetSteering& r) -> Message {
              if (!r.spec) fail(ErrorCode::invalid_input, "set_steering without a spec");
              b.set_steering(*r.spec);
              return reply_to(request, SetSteering{});
            },
            [&](const ClearSteering&) -> Message {
              b.clear_steering();
              return reply_to(request, ClearSteering{});
            },
            [&](const EmbedRequest& r) -> Message { return reply_to(request, EmbedReply{b.embed(r.sequence)}); },
            [&](const ClassifyRequest& r) -> Message {
              const auto c = b.classify(r.sequence);
              return reply_to(request, ClassifyReply{c.label, c.score});
            },
            [&](const FoldRequest& r) -> Message {
              auto f = b.fold_confidence(r.sequence);
              return reply_to(request, FoldReply{f.mean_plddt, std::move(f.per_residue)});
            },
            [&](const auto&) -> Message {
              fail(ErrorCode::invalid_input, "'" + std::string(request.kind()) + "' is not a request kind");
            },
        },
        request.payload);
  } catch (const Error& e) {
    return reply_to(request, ErrorReply{e.code(), e.what()});
  } catch (const std::exception& e) {
    return reply_to(request, ErrorReply{ErrorCode::backend, e.what()});
  }
}

void Server::serve(Channel& channel) {
  Connection conn(*this);
  while (true) {
    std::optional<Message> request;
    try {
      request = channel.receive();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::format) throw;
      // Unparseable frame: report it and keep the connection alive.
      channel.send(Message{0, 0, ErrorReply{ErrorCode::format, e.what()}});
      if (channel.desynchronised()) return;
      continue;
    }
    if (!request) return;
    channel.send(conn.handle(*request));
  }
}

void Server::listen(const std::string& address) {
  if (address == "stdio") {
    Channel ch(STDIN_FILENO, STDOUT_FILENO, false);
    serve(ch);
    return;
  }
  int fd = -1;
  if (address.starts_with("unix:")) {
    const std::string path = address.substr(5);
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof addr.sun_path) fail(ErrorCode::config, "unix socket path too long");
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    ::unlink(path.c_str());
    fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      fail(ErrorCode::connection, "cannot bind " + address + ": " + std::strerror(errno));
    }
  } else if (address.starts_with("tcp:")) {
    const std::string rest = address.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) fail(ErrorCode::config, "tcp address must be tcp:host:port");
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(rest.substr(0, colon).c_str(), rest.substr(colon + 1).c_str(), &hints, &res) != 0 || !res) {
      fail(ErrorCode::config, "cannot resolve " + address);
    }
    fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    const int yes = 1;
    if (fd >= 0) ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    const bool bound = fd >= 0 && ::bind(fd, res->ai_addr, res->ai_addrlen) == 0;
    ::freeaddrinfo(res);
    if (!bound) fail(ErrorCode::connection, "cannot bind " + address + ": " + std::strerror(errno));
  } else {
    fail(ErrorCode::config, "listen address must be stdio, unix:/path or tcp:host:port");
  }
  if (::listen(fd, 16) != 0) fail(ErrorCode::connection, "listen failed: " + std::string(std::strerror(errno)));
  while (true) {
    const int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::connection, "accept failed: " + std::string(std::strerror(errno)));
    }
    std::thread([this, client] {
      Channel ch(client, client, true);
      try {
        serve(ch);
      } catch (const Error&) {
        // Peer vanished; its sessions die with the connection.
      }
    }).detach();
  }
}

}  // namespace logitdiff::protocol
