#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <sys/types.h>

#include "logitdiff/backend/protocol.hpp"

namespace logitdiff::protocol {

// Bidirectional framed byte stream over a pair of file descriptors (the same
// descriptor for sockets). I/O failures raise ErrorCode::connection.
class Channel {
 public:
  Channel(int read_fd, int write_fd, bool owns_fds);
  ~Channel();
  Channel(Channel&& other) noexcept;
  Channel& operator=(Channel&& other) noexcept;
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  void send(const Message& message);
  // nullopt on orderly end of stream.
  std::optional<Message> receive();

  void close();
  bool desynchronised() const noexcept { return decoder_.broken(); }

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
  bool owns_ = false;
  FrameDecoder decoder_;
};

// "unix:/path" or "tcp:host:port".
Channel connect_socket(std::string_view address);

// Child process speaking the protocol on its stdin/stdout.
class ChildProcess {
 public:
  explicit ChildProcess(const std::string& shell_command);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  Channel& channel() noexcept { return *channel_; }

 private:
  pid_t pid_ = -1;
  std::optional<Channel> channel_;
};

}  // namespace logitdiff::protocol
