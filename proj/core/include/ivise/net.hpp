#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ivise::net {

// Owning TCP socket. Blocking I/O with optional poll-based timeouts.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();

  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void write_all(std::span<const std::uint8_t> bytes);
  void write_all(const std::string& text);

  // Returns false on orderly EOF before any byte was read; throws IoError
  // on EOF mid-buffer, on error, or when timeout_ms (>= 0) elapses.
  bool read_exact(std::span<std::uint8_t> out, int timeout_ms = -1);

  // Reads through the next '\n' (stripped). nullopt on EOF.
  std::optional<std::string> read_line(int timeout_ms = -1);

  // Wakes any thread blocked in a read on this socket.
  void shutdown();
  void close();

  // True when data (or EOF) is pending; a negative timeout blocks.
  bool wait_readable(int timeout_ms);

 private:
  int fd_ = -1;
  std::string line_buffer_;
};

class TcpListener {
 public:
  // port 0 binds an ephemeral port; see port().
  TcpListener(const std::string& host, int port);
  ~TcpListener();

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  int port() const { return port_; }

  // nullopt on timeout or after close().
  std::optional<Socket> accept(int timeout_ms);
  void close();

 private:
  int fd_ = -1;
  int port_ = 0;
};

Socket connect_tcp(const std::string& host, int port, int timeout_ms);

}  // namespace ivise::net
