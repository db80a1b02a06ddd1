// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cpt/common/error.hpp"
#include "cpt/protocol/codec.hpp"

namespace cpt::net {

class NetError : public Error
{
 public:
  using Error::Error;
};

// Raised by Connection::receive when the peer closes the stream cleanly
// between frames.
class ConnectionClosed : public NetError
{
 public:
  using NetError::NetError;
};

struct Endpoint
{
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
  friend bool operator==(const Endpoint &, const Endpoint &) = default;
};

// "host:port" or ":port" (host defaults to 127.0.0.1). Throws StructuralError.
Endpoint parse_endpoint(const std::string &text);
std::vector<Endpoint> parse_endpoint_list(const std::string &text);

class Socket
{
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket &&o) noexcept : fd_(o.release()) {}
  Socket &operator=(Socket &&o) noexcept;
  Socket(const Socket &) = delete;
  Socket &operator=(const Socket &) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() { return std::exchange(fd_, -1); }
  void close();
  // Wakes up threads blocked in reads or writes on this socket.
  void shutdown();

 private:
  int fd_ = -1;
};

class Listener
{
 public:
  // Binds and listens. Port 0 picks an ephemeral port; see port().
  explicit Listener(const Endpoint &endpoint);

  std::uint16_t port() const { return port_; }
  Endpoint endpoint() const { return {host_, port_}; }
  int fd() const { return socket_.fd(); }
  // nullopt on timeout.
  std::optional<Socket> accept(std::chrono::milliseconds timeout);
  void close() { socket_.close(); }

 private:
  Socket socket_;
  std::string host_;
  std::uint16_t port_ = 0;
};

// Retries refused connections until `timeout` elapses.
Socket connect(const Endpoint &endpoint, std::chrono::milliseconds timeout);

// A framed message stream over one TCP socket. One thread may send while
// another receives; neither side is safe for concurrent use by two threads.
class Connection
{
 public:
  Connection() = default;
  explicit Connection(Socket socket);

  bool valid() const { return socket_.valid(); }
  int fd() const { return socket_.fd(); }

  // Encodes and writes one frame. Returns the frame size in bytes.
  std::size_t send(const proto::Message &message);
  // Writes pre-encoded frame bytes.
  void send_bytes(std::span<const std::uint8_t> bytes);

  // Blocks until a complete message arrives. Throws ConnectionClosed on a
  // clean EOF, NetError on socket errors and proto::ProtocolError on bad
  // frames or frame ids that do not increase.
  proto::Message receive();
  // As receive(), but returns nullopt if nothing complete arrives in time.
  std::optional<proto::Message> receive(std::chrono::milliseconds timeout);

  std::uint64_t bytes_sent() const { return bytes_sent_.load(std::memory_order_relaxed); }
  std::uint64_t bytes_received() const { return bytes_received_.load(std::memory_order_relaxed); }
  // Size of the most recently received frame, envelope included.
  std::size_t last_frame_size() const { return last_frame_size_; }

  void shutdown() { socket_.shutdown(); }
  void close() { socket_.close(); }

 private:
  bool fill(std::optional<std::chrono::steady_clock::time_point> deadline);

  Socket socket_;
  proto::FrameReader reader_;
  proto::FrameOrderGuard recv_guard_;
  proto::FrameOrderGuard send_guard_;
  std::vector<std::uint8_t> send_buffer_;
  std::atomic<std::uint64_t> bytes_sent_{0};
  std::atomic<std::uint64_t> bytes_received_{0};
  std::size_t last_frame_size_ = 0;
};

} // namespace cpt::net
