// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cpt/dist/distribution.hpp"
#include "cpt/render/radiance_buffer.hpp"
#include "cpt/render/scene.hpp"
#include "cpt/render/scene_update.hpp"

namespace cpt::proto {

// Wire envelope: magic "CPT1" | u8 msg_type | u32 payload_len (LE) | payload.
inline constexpr std::array<std::uint8_t, 4> kMagic{'C', 'P', 'T', '1'};
inline constexpr std::size_t kHeaderSize = 9;
inline constexpr std::uint32_t kMaxPayload = 256u << 20;
inline constexpr std::uint16_t kProtocolVersion = 1;

enum class MsgType : std::uint8_t
{
  hello = 1,
  config = 2,
  camera_event = 3,
  scene_update = 4,
  radiance_buffer = 5,
  frame_image = 6,
  stats = 7,
  shutdown = 8,
};

enum class Role : std::uint8_t
{
  client = 0,
  master = 1,
  worker = 2,
};

enum class ImageEncoding : std::uint8_t
{
  raw_rgb8 = 0,
  png = 1,
  jpeg = 2,
  // Debug encoding: the merged float radiance buffer (sums) followed by spp,
  // used for image-quality measurements that must not see tone mapping.
  radiance_f32 = 3,
};

const char *to_string(ImageEncoding e);
ImageEncoding parse_encoding(const std::string &s);

struct Hello
{
  Role role = Role::client;
  std::uint32_t node_id = 0;
  std::uint16_t version = kProtocolVersion;

  friend bool operator==(const Hello &, const Hello &) = default;
};

struct Config
{
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  Strategy strategy = Strategy::stride;
  std::uint32_t layout_w = 1; // stride layout; 1x1 for other strategies
  std::uint32_t layout_h = 1;
  std::uint32_t per_node_spp = 1;
  std::uint32_t participant_index = 0;
  std::uint32_t participant_count = 1;
  std::uint32_t max_depth = kDefaultMaxDepth;
  std::uint32_t tile_w = kDefaultTileSize.width;
  std::uint32_t tile_h = kDefaultTileSize.height;
  std::uint64_t seed = 0;
  std::string scene_name;

  PlanConfig plan_config() const;
  friend bool operator==(const Config &, const Config &) = default;
};

// The minimal user event: camera pose for the frame it names.
struct CameraEvent
{
  std::uint64_t frame_id = 0;
  Camera camera;

  friend bool operator==(const CameraEvent &, const CameraEvent &) = default;
};

// Scene deltas; the frame id is update.frame_time.
struct SceneUpdateMsg
{
  SceneUpdate update;

  friend bool operator==(const SceneUpdateMsg &, const SceneUpdateMsg &) = default;
};

// The frame id is buffer.frame_id; spp travels with the sums.
struct RadianceBufferMsg
{
  std::uint32_t participant = 0;
  RadianceBuffer buffer;

  friend bool operator==(const RadianceBufferMsg &, const RadianceBufferMsg &) = default;
};

struct FrameImage
{
  std::uint64_t frame_id = 0;
  ImageEncoding encoding = ImageEncoding::raw_rgb8;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> bytes;

  friend bool operator==(const FrameImage &, const FrameImage &) = default;
};

// Named timings in milliseconds.
struct Stats
{
  std::uint64_t frame_id = 0;
  std::vector<std::pair<std::string, double>> fields;

  std::optional<double> get(const std::string &name) const;
  friend bool operator==(const Stats &, const Stats &) = default;
};

struct Shutdown
{
  std::string reason;

  friend bool operator==(const Shutdown &, const Shutdown &) = default;
};

// Alternative index + 1 == MsgType value.
using Message = std::variant<Hello,
    Config,
    CameraEvent,
    SceneUpdateMsg,
    RadianceBufferMsg,
    FrameImage,
    Stats,
    Shutdown>;

inline MsgType type_of(const Message &m) { return static_cast<MsgType>(m.index() + 1); }
const char *to_string(MsgType t);

// Frame id carried by the message, if its type carries one.
std::optional<std::uint64_t> frame_id_of(const Message &m);

} // namespace cpt::proto
