// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/net/tcp.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <thread>
#include <unistd.h>

namespace cpt::net {

namespace {

std::string errno_text(const char *what)
{
  return std::string(what) + ": " + std::strerror(errno);
}

sockaddr_in resolve(const Endpoint &ep)
{
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  const std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
  if (host.empty() || host == "*") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1)
    return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo *res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
    throw NetError("cannot resolve host '" + ep.host + "'");
  addr.sin_addr = reinterpret_cast<sockaddr_in *>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

void set_nodelay(int fd)
{
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

// Milliseconds until `deadline`, clamped to [0, INT_MAX]; -1 without one.
int poll_timeout(std::optional<std::chrono::steady_clock::time_point> deadline)
{
  if (!deadline)
    return -1;
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
      *deadline - std::chrono::steady_clock::now())
                        .count();
  return static_cast<int>(std::clamp<long long>(left, 0, 1 << 30));
}

} // namespace

Endpoint parse_endpoint(const std::string &text)
{
  const auto colon = text.rfind(':');
  if (colon == std::string::npos)
    throw StructuralError("endpoint '" + text + "' is not of the form host:port");
  Endpoint ep;
  if (colon > 0)
    ep.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  try {
    std::size_t used = 0;
    const unsigned long p = std::stoul(port, &used);
    if (used != port.size() || p > 65535)
      throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(p);
  } catch (const std::logic_error &) {
    throw StructuralError("endpoint '" + text + "' has an invalid port");
  }
  return ep;
}

std::vector<Endpoint> parse_endpoint_list(const std::string &text)
{
  std::vector<Endpoint> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!item.empty())
      out.push_back(parse_endpoint(item));
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return out;
}

Socket::~Socket() { close(); }

Socket &Socket::operator=(Socket &&o) noexcept
{
  if (this != &o) {
    close();
    fd_ = o.release();
  }
  return *this;
}

void Socket::close()
{
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown()
{
  if (fd_ >= 0)
    ::shutdown(fd_, SHUT_RDWR);
}

Listener::Listener(const Endpoint &endpoint) : host_(endpoint.host)
{
  const sockaddr_in addr = resolve(endpoint);
  socket_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!socket_.valid())
    throw NetError(errno_text("socket"));
  int one = 1;
  ::setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(socket_.fd(), reinterpret_cast<const sockaddr *>(&addr), sizeof(addr)) != 0)
    throw NetError(errno_text(("bind " + endpoint.to_string()).c_str()));
  if (::listen(socket_.fd(), 16) != 0)
    throw NetError(errno_text("listen"));
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(socket_.fd(), reinterpret_cast<sockaddr *>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds timeout)
{
  pollfd p{socket_.fd(), POLLIN, 0};
  const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (r < 0 && errno != EINTR)
    throw NetError(errno_text("poll"));
  if (r <= 0)
    return std::nullopt;
  const int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) {
    if (errno == EAGAIN || errno == EINTR || errno == ECONNABORTED)
      return std::nullopt;
    throw NetError(errno_text("accept"));
  }
  set_nodelay(fd);
  return Socket(fd);
}

Socket connect(const Endpoint &endpoint, std::chrono::milliseconds timeout)
{
  const sockaddr_in addr = resolve(endpoint);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid())
      throw NetError(errno_text("socket"));
    if (::connect(s.fd(), reinterpret_cast<const sockaddr *>(&addr), sizeof(addr)) == 0) {
      set_nodelay(s.fd());
      return s;
    }
    const int err = errno;
    if ((err != ECONNREFUSED && err != ETIMEDOUT && err != EINTR)
        || std::chrono::steady_clock::now() >= deadline)
      throw NetError("connect " + endpoint.to_string() + ": " + std::strerror(err));
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

Connection::Connection(Socket socket) : socket_(std::move(socket)) {}

std::size_t Connection::send(const proto::Message &message)
{
  send_guard_.check(message);
  send_buffer_.clear();
  proto::encode_into(message, send_buffer_);
  send_bytes(send_buffer_);
  return send_buffer_.size();
}

void Connection::send_bytes(std::span<const std::uint8_t> bytes)
{
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(socket_.fd(), bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR)
        continue;
      throw NetError(errno_text("send"));
    }
    off += static_cast<std::size_t>(n);
  }
  bytes_sent_.fetch_add(bytes.size(), std::memory_order_relaxed);
}

bool Connection::fill(std::optional<std::chrono::steady_clock::time_point> deadline)
{
  if (deadline) {
    pollfd p{socket_.fd(), POLLIN, 0};
    const int r = ::poll(&p, 1, poll_timeout(deadline));
    if (r < 0 && errno != EINTR)
      throw NetError(errno_text("poll"));
    if (r <= 0)
      return false;
  }
  std::uint8_t chunk[64 * 1024];
  ssize_t n;
  do {
    n = ::recv(socket_.fd(), chunk, sizeof(chunk), 0);
  } while (n < 0 && errno == EINTR);
  if (n < 0)
    throw NetError(errno_text("recv"));
  if (n == 0) {
    if (reader_.buffered() > 0)
      throw NetError("connection closed in the middle of a frame");
    throw ConnectionClosed("connection closed by peer");
  }
  bytes_received_.fetch_add(static_cast<std::uint64_t>(n), std::memory_order_relaxed);
  reader_.feed({chunk, static_cast<std::size_t>(n)});
  return true;
}

std::optional<proto::Message> Connection::receive(std::chrono::milliseconds timeout)
{
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const std::size_t before = reader_.buffered();
    if (auto m = reader_.next()) {
      last_frame_size_ = before - reader_.buffered();
      recv_guard_.check(*m);
      return m;
    }
    if (!fill(deadline))
      return std::nullopt;
  }
}

proto::Message Connection::receive()
{
  for (;;) {
    const std::size_t before = reader_.buffered();
    if (auto m = reader_.next()) {
      last_frame_size_ = before - reader_.buffered();
      recv_guard_.check(*m);
      return std::move(*m);
    }
    fill(std::nullopt);
  }
}

} // namespace cpt::net
