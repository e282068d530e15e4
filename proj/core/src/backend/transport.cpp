#include "logitdiff/backend/transport.hpp"

#include <arpa/inet.h>
#include <csignal>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>

namespace logitdiff::protocol {
namespace {

[[noreturn]] void io_failure(const std::string& what) {
  fail(ErrorCode::connection, what + ": " + std::strerror(errno));
}

void ignore_sigpipe() {
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

}  // namespace

Channel::Channel(int read_fd, int write_fd, bool owns_fds) : read_fd_(read_fd), write_fd_(write_fd), owns_(owns_fds) {
  ignore_sigpipe();
}

Channel::~Channel() { close(); }

Channel::Channel(Channel&& other) noexcept
    : read_fd_(other.read_fd_), write_fd_(other.write_fd_), owns_(other.owns_), decoder_(std::move(other.decoder_)) {
  other.read_fd_ = other.write_fd_ = -1;
  other.owns_ = false;
}

Channel& Channel::operator=(Channel&& other) noexcept {
  if (this != &other) {
    close();
    read_fd_ = other.read_fd_;
    write_fd_ = other.write_fd_;
    owns_ = other.owns_;
    decoder_ = std::move(other.decoder_);
    other.read_fd_ = other.write_fd_ = -1;
    other.owns_ = false;
  }
  return *this;
}

void Channel::close() {
  if (owns_) {
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  }
  read_fd_ = write_fd_ = -1;
  owns_ = false;
}

void Channel::send(const Message& message) {
  if (write_fd_ < 0) fail(ErrorCode::connection, "channel closed");
  const std::string frame = encode_frame(message);
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t n = ::write(write_fd_, frame.data() + sent, frame.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("protocol write failed");
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<Message> Channel::receive() {
  if (read_fd_ < 0) fail(ErrorCode::connection, "channel closed");
  char buf[65536];
  while (true) {
    if (auto body = decoder_.next_body()) return decode_body(*body);
    const ssize_t n = ::read(read_fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure("protocol read failed");
    }
    if (n == 0) {
      if (decoder_.buffered() > 0) fail(ErrorCode::connection, "connection closed mid-frame");
      return std::nullopt;
    }
    decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
  }
}

Channel connect_socket(std::string_view address) {
  if (address.starts_with("unix:")) {
    const std::string path(address.substr(5));
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof addr.sun_path) fail(ErrorCode::config, "unix socket path too long: " + path);
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) io_failure("socket");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      const int saved = errno;
      ::close(fd);
      errno = saved;
      io_failure("cannot connect to " + std::string(address));
    }
    return Channel(fd, fd, true);
  }
  if (address.starts_with("tcp:")) {
    const std::string rest(address.substr(4));
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) fail(ErrorCode::config, "tcp address must be tcp:host:port");
    const std::string host = rest.substr(0, colon);
    const std::string port = rest.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
      fail(ErrorCode::connection, "cannot resolve " + std::string(address));
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) fail(ErrorCode::connection, "cannot connect to " + std::string(address));
    return Channel(fd, fd, true);
  }
  fail(ErrorCode::config, "unsupported socket address '" + std::string(address) + "'");
}

ChildProcess::ChildProcess(const std::string& shell_command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) io_failure("pipe");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    io_failure("pipe");
  }
  pid_ = ::fork();
  if (pid_ < 0) io_failure("fork");
  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", shell_command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  channel_.emplace(from_child[0], to_child[1], true);
}

ChildProcess::~ChildProcess() {
  if (channel_) channel_->close();  // EOF on the child's stdin ends its serve loop
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

}  // namespace logitdiff::protocol
