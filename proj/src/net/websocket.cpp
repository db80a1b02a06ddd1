// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/net/websocket.hpp"

#include <atomic>
#include <deque>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "cpt/pipeline/ring_queue.hpp"
#include "cpt/protocol/codec.hpp"

namespace cpt::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

Vec3 vec3_field(const json &j, const char *name)
{
  const auto it = j.find(name);
  if (it == j.end() || !it->is_array() || it->size() != 3)
    throw StructuralError(std::string("camera event field '") + name + "' must be a 3-array");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!(*it)[i].is_number())
      throw StructuralError(std::string("camera event field '") + name + "' must be numeric");
    v[i] = (*it)[i].get<float>();
  }
  return v;
}

json vec3_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

} // namespace

proto::CameraEvent parse_camera_event_json(const std::string &text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw StructuralError(std::string("camera event is not JSON: ") + e.what());
  }
  if (!j.is_object())
    throw StructuralError("camera event must be a JSON object");
  const auto id = j.find("frame_id");
  if (id == j.end() || !id->is_number_unsigned())
    throw StructuralError("camera event field 'frame_id' must be a non-negative integer");
  const auto fov = j.find("fov");
  if (fov == j.end() || !fov->is_number())
    throw StructuralError("camera event field 'fov' must be numeric");
  proto::CameraEvent e;
  e.frame_id = id->get<std::uint64_t>();
  e.camera.position = vec3_field(j, "position");
  e.camera.look_at = vec3_field(j, "look_at");
  e.camera.up = vec3_field(j, "up");
  e.camera.vertical_fov = fov->get<float>();
  validate(e.camera);
  return e;
}

std::string camera_event_json(const proto::CameraEvent &event)
{
  json j;
  j["frame_id"] = event.frame_id;
  j["position"] = vec3_json(event.camera.position);
  j["look_at"] = vec3_json(event.camera.look_at);
  j["up"] = vec3_json(event.camera.up);
  j["fov"] = event.camera.vertical_fov;
  return j.dump();
}

std::string stats_json(const proto::Stats &stats)
{
  json fields = json::object();
  for (const auto &[name, value] : stats.fields)
    fields[name] = value;
  return json{{"type", "stats"}, {"frame_id", stats.frame_id}, {"fields", fields}}.dump();
}

namespace {

struct Outgoing
{
  bool binary = false;
  std::shared_ptr<const std::string> data;
};

constexpr std::size_t kMaxQueuedBinary = 2;

} // namespace

struct WsServer::Impl
{
  class Session;

  explicit Impl(const Endpoint &endpoint) : acceptor(ioc), events(256)
  {
    const auto addr = asio::ip::make_address(
        endpoint.host == "localhost" || endpoint.host.empty() ? "127.0.0.1" : endpoint.host);
    tcp::endpoint ep(addr, endpoint.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
    port = acceptor.local_endpoint().port();
  }

  void do_accept();
  void post(Outgoing out);

  asio::io_context ioc;
  tcp::acceptor acceptor;
  std::uint16_t port = 0;
  std::shared_ptr<Session> session; // I/O thread only
  RingQueue<proto::CameraEvent> events; // produced on the I/O thread
  std::atomic<bool> is_connected{false};
  std::atomic<std::uint64_t> session_count{0};
  std::atomic<std::uint64_t> rejected{0};
  std::jthread thread;
};

class WsServer::Impl::Session : public std::enable_shared_from_this<Session>
{
 public:
  Session(Impl &owner, tcp::socket socket) : owner_(owner), ws_(std::move(socket)) {}

  void start()
  {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec)
        return self->fail();
      self->open_ = true;
      if (self->owner_.session == self)
        self->owner_.is_connected = true;
      self->read();
      self->write_next();
    });
  }

  void send(Outgoing out)
  {
    if (out.binary) {
      std::size_t queued = 0;
      for (const auto &q : queue_)
        queued += q.binary ? 1 : 0;
      // Never drop the frame currently being written (queue front).
      while (queued >= kMaxQueuedBinary) {
        auto it = queue_.begin() + (writing_ ? 1 : 0);
        while (it != queue_.end() && !it->binary)
          ++it;
        if (it == queue_.end())
          break;
        queue_.erase(it);
        --queued;
      }
    }
    queue_.push_back(std::move(out));
    write_next();
  }

  void close()
  {
    if (!open_)
      return fail();
    open_ = false;
    ws_.async_close(websocket::close_code::going_away,
        [self = shared_from_this()](beast::error_code) {});
  }

 private:
  void read()
  {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec)
        return self->fail();
      if (self->ws_.got_text()) {
        try {
          auto ev = parse_camera_event_json(beast::buffers_to_string(self->buffer_.data()));
          if (self->owner_.events.try_push(std::move(ev)) != PushResult::accepted)
            ++self->owner_.rejected;
        } catch (const Error &) {
          ++self->owner_.rejected;
        }
      } else {
        ++self->owner_.rejected;
      }
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write_next()
  {
    if (!open_ || writing_ || queue_.empty())
      return;
    writing_ = true;
    const Outgoing &out = queue_.front();
    ws_.binary(out.binary);
    ws_.async_write(asio::buffer(*out.data),
        [self = shared_from_this()](beast::error_code ec, std::size_t) {
          self->writing_ = false;
          if (ec)
            return self->fail();
          self->queue_.pop_front();
          self->write_next();
        });
  }

  void fail()
  {
    open_ = false;
    queue_.clear();
    if (owner_.session.get() == this) {
      owner_.is_connected = false;
      owner_.session.reset();
    }
  }

  Impl &owner_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> queue_;
  bool open_ = false;
  bool writing_ = false;
};

void WsServer::Impl::do_accept()
{
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec)
      return; // acceptor closed
    if (session)
      session->close();
    is_connected = false;
    session = std::make_shared<Session>(*this, std::move(socket));
    ++session_count;
    session->start();
    do_accept();
  });
}

void WsServer::Impl::post(Outgoing out)
{
  asio::post(ioc, [this, out = std::move(out)]() mutable {
    if (session)
      session->send(std::move(out));
  });
}

WsServer::WsServer(const Endpoint &endpoint) : impl_(std::make_unique<Impl>(endpoint))
{
  impl_->do_accept();
  impl_->thread = std::jthread([impl = impl_.get()] { impl->ioc.run(); });
}

WsServer::~WsServer() { stop(); }

std::uint16_t WsServer::port() const { return impl_->port; }
bool WsServer::connected() const { return impl_->is_connected; }
std::uint64_t WsServer::sessions() const { return impl_->session_count; }
std::uint64_t WsServer::rejected_events() const { return impl_->rejected; }

std::optional<proto::CameraEvent> WsServer::next_event(std::chrono::milliseconds timeout)
{
  return impl_->events.pop_blocking(timeout);
}

void WsServer::send_frame(const proto::FrameImage &frame)
{
  if (!connected())
    return;
  const auto payload = proto::encode_payload(frame);
  impl_->post({true, std::make_shared<const std::string>(payload.begin(), payload.end())});
}

void WsServer::send_text(std::string text)
{
  if (!connected())
    return;
  impl_->post({false, std::make_shared<const std::string>(std::move(text))});
}

void WsServer::stop()
{
  if (!impl_->thread.joinable())
    return;
  asio::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    if (impl->session)
      impl->session->close();
  });
  // Give the close handshake a moment, then stop the loop regardless.
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  impl_->ioc.stop();
  impl_->thread.join();
  impl_->is_connected = false;
}

} // namespace cpt::net
