// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>
#include <thread>

#include "cpt/net/tcp.hpp"
#include "cpt/net/websocket.hpp"
#include "cpt/protocol/codec.hpp"

using namespace cpt;
using namespace std::chrono_literals;
namespace beast = boost::beast;
namespace asio = boost::asio;

TEST_CASE("endpoint parsing")
{
  CHECK(net::parse_endpoint("10.0.0.2:7000") == net::Endpoint{"10.0.0.2", 7000});
  CHECK(net::parse_endpoint(":81") == net::Endpoint{"127.0.0.1", 81});
  CHECK_THROWS(net::parse_endpoint("nope"));
  CHECK_THROWS(net::parse_endpoint("host:99999"));
  const auto list = net::parse_endpoint_list("127.0.0.1:1,:2");
  REQUIRE(list.size() == 2);
  CHECK(list[1].port == 2);
}

TEST_CASE("tcp connection exchanges framed messages")
{
  net::Listener listener({"127.0.0.1", 0});
  REQUIRE(listener.port() != 0);
  std::unique_ptr<net::Connection> server;
  std::jthread acceptor([&] {
    auto s = listener.accept(5000ms);
    REQUIRE(s);
    server = std::make_unique<net::Connection>(std::move(*s));
  });
  net::Connection client(net::connect(listener.endpoint(), 5000ms));
  acceptor.join();
  REQUIRE(server);

  proto::RadianceBufferMsg rb;
  rb.buffer = RadianceBuffer(80, 90, 4, 3);
  rb.buffer.rgb[17] = 2.5f;
  CHECK(client.send(rb) == 86433);
  CHECK(client.send(proto::CameraEvent{5, Camera{}}) > 0);
  CHECK(std::get<proto::RadianceBufferMsg>(server->receive()) == rb);
  CHECK(std::get<proto::CameraEvent>(server->receive()).frame_id == 5);
  CHECK(server->last_frame_size() == proto::kHeaderSize + 48);
  CHECK(server->bytes_received() == client.bytes_sent());
  CHECK_FALSE(server->receive(20ms));

  // Going backwards in frame id is a protocol error.
  client.send(proto::CameraEvent{6, Camera{}});
  server->receive();
  client.send_bytes(proto::encode(proto::CameraEvent{6, Camera{}}));
  CHECK_THROWS_AS(server->receive(), proto::ProtocolError);

  client.close();
  net::Listener l2({"127.0.0.1", 0});
  std::jthread a2([&] {
    auto s = l2.accept(5000ms);
    net::Connection c(std::move(*s));
    c.close();
  });
  net::Connection c2(net::connect(l2.endpoint(), 5000ms));
  a2.join();
  CHECK_THROWS_AS(c2.receive(), net::ConnectionClosed);
}

TEST_CASE("accept times out; connect fails for a closed port")
{
  net::Listener listener({"127.0.0.1", 0});
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_FALSE(listener.accept(30ms));
  CHECK(std::chrono::steady_clock::now() - t0 >= 30ms);
  const net::Endpoint ep = listener.endpoint();
  listener.close();
  CHECK_THROWS_AS(net::connect(ep, 200ms), net::NetError);
}

TEST_CASE("camera event JSON")
{
  const auto e = net::parse_camera_event_json(
      R"({"frame_id": 12, "position": [1, 2, 3], "look_at": [0, 0, 0], "up": [0, 1, 0], "fov": 40})");
  CHECK(e.frame_id == 12);
  CHECK(e.camera.position == Vec3{1.f, 2.f, 3.f});
  CHECK(e.camera.vertical_fov == 40.f);
  CHECK(net::parse_camera_event_json(net::camera_event_json(e)) == e);
  CHECK_THROWS(net::parse_camera_event_json("{}"));
  CHECK_THROWS(net::parse_camera_event_json("not json"));
  CHECK_THROWS(net::parse_camera_event_json(
      R"({"frame_id": 1, "position": [1, 2], "look_at": [0, 0, 0], "up": [0, 1, 0], "fov": 40})"));
  CHECK_THROWS(net::parse_camera_event_json(
      R"({"frame_id": 1, "position": [0, 0, 5], "look_at": [0, 0, 0], "up": [0, 1, 0], "fov": 200})"));

  const auto j = nlohmann::json::parse(net::stats_json({4, {{"render_ms", 1.5}}}));
  CHECK(j["type"] == "stats");
  CHECK(j["frame_id"] == 4);
  CHECK(j["fields"]["render_ms"] == 1.5);
}

TEST_CASE("websocket endpoint: camera events up, frames down")
{
  net::WsServer server({"127.0.0.1", 0});
  asio::io_context ioc;
  asio::ip::tcp::resolver resolver(ioc);
  beast::websocket::stream<asio::ip::tcp::socket> ws(ioc);
  asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(server.port())));
  ws.handshake("127.0.0.1", "/");

  for (int i = 0; i < 200 && !server.connected(); ++i)
    std::this_thread::sleep_for(5ms);
  CHECK(server.connected());
  CHECK(server.sessions() == 1);

  ws.text(true);
  ws.write(asio::buffer(std::string("garbage")));
  proto::CameraEvent ev{3, Camera{{0.f, 1.f, 6.f}, {0.f, 0.f, 0.f}, {0.f, 1.f, 0.f}, 50.f}};
  ws.write(asio::buffer(net::camera_event_json(ev)));
  const auto got = server.next_event(2000ms);
  REQUIRE(got);
  CHECK(*got == ev);
  CHECK(server.rejected_events() == 1);
  CHECK_FALSE(server.next_event(10ms));

  proto::FrameImage frame{3, proto::ImageEncoding::jpeg, 2, 2, {0xff, 0xd8, 1, 2, 3}};
  server.send_frame(frame);
  beast::flat_buffer buf;
  ws.read(buf);
  CHECK(ws.got_binary());
  const auto *data = static_cast<const std::uint8_t *>(buf.data().data());
  const std::vector<std::uint8_t> payload(data, data + buf.size());
  CHECK(payload == proto::encode_payload(frame));
  CHECK(std::get<proto::FrameImage>(proto::decode_payload(proto::MsgType::frame_image, payload))
      == frame);

  server.send_text(net::stats_json({3, {{"render_ms", 2.0}}}));
  buf.clear();
  ws.read(buf);
  CHECK(ws.got_text());
  CHECK(nlohmann::json::parse(beast::buffers_to_string(buf.data()))["frame_id"] == 3);

  ws.close(beast::websocket::close_code::normal);
  for (int i = 0; i < 200 && server.connected(); ++i)
    std::this_thread::sleep_for(5ms);
  CHECK_FALSE(server.connected());
  server.send_frame(frame); // dropped silently with no viewer
  server.stop();
}
