// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/protocol/codec.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace cpt::proto {

const char *to_string(MsgType t)
{
  switch (t) {
  case MsgType::hello:
    return "HELLO";
  case MsgType::config:
    return "CONFIG";
  case MsgType::camera_event:
    return "CAMERA_EVENT";
  case MsgType::scene_update:
    return "SCENE_UPDATE";
  case MsgType::radiance_buffer:
    return "RADIANCE_BUFFER";
  case MsgType::frame_image:
    return "FRAME_IMAGE";
  case MsgType::stats:
    return "STATS";
  case MsgType::shutdown:
    return "SHUTDOWN";
  }
  return "UNKNOWN";
}

const char *to_string(DecodeStatus s)
{
  switch (s) {
  case DecodeStatus::ok:
    return "ok";
  case DecodeStatus::incomplete:
    return "incomplete";
  case DecodeStatus::bad_magic:
    return "bad magic";
  case DecodeStatus::unknown_type:
    return "unknown message type";
  case DecodeStatus::oversize:
    return "oversize payload";
  case DecodeStatus::length_mismatch:
    return "length mismatch";
  case DecodeStatus::malformed:
    return "malformed payload";
  case DecodeStatus::out_of_order:
    return "frame id out of order";
  }
  return "unknown";
}

const char *to_string(ImageEncoding e)
{
  switch (e) {
  case ImageEncoding::raw_rgb8:
    return "raw";
  case ImageEncoding::png:
    return "png";
  case ImageEncoding::jpeg:
    return "jpeg";
  case ImageEncoding::radiance_f32:
    return "radiance";
  }
  return "unknown";
}

ImageEncoding parse_encoding(const std::string &s)
{
  if (s == "raw" || s == "raw-rgb8")
    return ImageEncoding::raw_rgb8;
  if (s == "png")
    return ImageEncoding::png;
  if (s == "jpeg" || s == "jpg")
    return ImageEncoding::jpeg;
  if (s == "radiance" || s == "radiance-f32")
    return ImageEncoding::radiance_f32;
  throw StructuralError("unknown image encoding '" + s + "'");
}

PlanConfig Config::plan_config() const
{
  PlanConfig c;
  c.strategy = strategy;
  c.participants = participant_count;
  c.dims = {width, height};
  c.per_node_spp = per_node_spp;
  c.seed = seed;
  c.max_depth = max_depth;
  c.tile_size = {tile_w, tile_h};
  return c;
}

std::optional<double> Stats::get(const std::string &name) const
{
  for (const auto &[k, v] : fields)
    if (k == name)
      return v;
  return std::nullopt;
}

std::optional<std::uint64_t> frame_id_of(const Message &m)
{
  if (auto *e = std::get_if<CameraEvent>(&m))
    return e->frame_id;
  if (auto *u = std::get_if<SceneUpdateMsg>(&m))
    return u->update.frame_time;
  if (auto *r = std::get_if<RadianceBufferMsg>(&m))
    return r->buffer.frame_id;
  if (auto *f = std::get_if<FrameImage>(&m))
    return f->frame_id;
  if (auto *s = std::get_if<Stats>(&m))
    return s->frame_id;
  return std::nullopt;
}

namespace {

static_assert(sizeof(Vec3) == 3 * sizeof(float));

class Writer
{
 public:
  explicit Writer(std::vector<std::uint8_t> &out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec3(const Vec3 &v)
  {
    f32(v.x);
    f32(v.y);
    f32(v.z);
  }
  void str(const std::string &s)
  {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void bytes(std::span<const std::uint8_t> b)
  {
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void floats(std::span<const float> f)
  {
    if constexpr (std::endian::native == std::endian::little) {
      const auto *p = reinterpret_cast<const std::uint8_t *>(f.data());
      out_.insert(out_.end(), p, p + f.size_bytes());
    } else {
      for (float v : f)
        f32(v);
    }
  }

 private:
  template <typename T>
  void put_le(T v)
  {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> &out_;
};

class Reader
{
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  Vec3 vec3()
  {
    const float x = f32(), y = f32(), z = f32();
    return {x, y, z};
  }
  std::string str()
  {
    const auto n = u32();
    const auto b = take(n);
    return std::string(b.begin(), b.end());
  }
  std::vector<std::uint8_t> bytes()
  {
    const auto n = u32();
    const auto b = take(n);
    return {b.begin(), b.end()};
  }
  void floats(std::span<float> out)
  {
    const auto b = take(out.size_bytes());
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), b.data(), b.size());
    } else {
      Reader sub(b);
      for (float &f : out)
        f = sub.f32();
    }
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  // Guards element counts read from the wire before allocating.
  void need(std::uint64_t count, std::uint64_t bytes_each)
  {
    if (bytes_each != 0 && count > remaining() / bytes_each)
      throw ProtocolError(DecodeStatus::length_mismatch, "element count exceeds payload");
  }

 private:
  std::span<const std::uint8_t> take(std::size_t n)
  {
    if (n > remaining())
      throw ProtocolError(DecodeStatus::length_mismatch, "payload truncated");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T get_le()
  {
    const auto b = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(T(b[i]) << (8 * i));
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_camera(Writer &w, const Camera &c)
{
  w.vec3(c.position);
  w.vec3(c.look_at);
  w.vec3(c.up);
  w.f32(c.vertical_fov);
}

Camera read_camera(Reader &r)
{
  Camera c;
  c.position = r.vec3();
  c.look_at = r.vec3();
  c.up = r.vec3();
  c.vertical_fov = r.f32();
  return c;
}

template <typename E>
E checked_enum(std::uint8_t v, std::uint8_t max, const char *what)
{
  if (v > max)
    throw ProtocolError(DecodeStatus::malformed, std::string("invalid ") + what);
  return static_cast<E>(v);
}

struct PayloadWriter
{
  Writer &w;

  void operator()(const Hello &m)
  {
    w.u8(static_cast<std::uint8_t>(m.role));
    w.u32(m.node_id);
    w.u16(m.version);
  }
  void operator()(const Config &m)
  {
    w.u32(m.width);
    w.u32(m.height);
    w.u8(static_cast<std::uint8_t>(m.strategy));
    w.u32(m.layout_w);
    w.u32(m.layout_h);
    w.u32(m.per_node_spp);
    w.u32(m.participant_index);
    w.u32(m.participant_count);
    w.u32(m.max_depth);
    w.u32(m.tile_w);
    w.u32(m.tile_h);
    w.u64(m.seed);
    w.str(m.scene_name);
  }
  void operator()(const CameraEvent &m)
  {
    w.u64(m.frame_id);
    write_camera(w, m.camera);
  }
  void operator()(const SceneUpdateMsg &m)
  {
    const SceneUpdate &u = m.update;
    w.u64(u.frame_time);
    w.u32(static_cast<std::uint32_t>(u.meshes.size()));
    for (const MeshDelta &d : u.meshes) {
      w.u32(d.mesh_id);
      w.u32(static_cast<std::uint32_t>(d.ranges.size()));
      for (const VertexRange &r : d.ranges) {
        w.u32(r.begin);
        w.u32(static_cast<std::uint32_t>(r.positions.size()));
        w.floats({reinterpret_cast<const float *>(r.positions.data()), r.positions.size() * 3});
      }
    }
    w.u8(u.camera ? 1 : 0);
    if (u.camera)
      write_camera(w, *u.camera);
  }
  void operator()(const RadianceBufferMsg &m)
  {
    const RadianceBuffer &b = m.buffer;
    w.u64(b.frame_id);
    w.u32(m.participant);
    w.u32(b.width);
    w.u32(b.height);
    w.u32(b.spp);
    w.floats(b.rgb);
  }
  void operator()(const FrameImage &m)
  {
    w.u64(m.frame_id);
    w.u8(static_cast<std::uint8_t>(m.encoding));
    w.u32(m.width);
    w.u32(m.height);
    w.bytes(m.bytes);
  }
  void operator()(const Stats &m)
  {
    w.u64(m.frame_id);
    w.u32(static_cast<std::uint32_t>(m.fields.size()));
    for (const auto &[name, value] : m.fields) {
      w.str(name);
      w.f64(value);
    }
  }
  void operator()(const Shutdown &m) { w.str(m.reason); }
};

Message read_payload(MsgType type, Reader &r)
{
  switch (type) {
  case MsgType::hello: {
    Hello m;
    m.role = checked_enum<Role>(r.u8(), 2, "role");
    m.node_id = r.u32();
    m.version = r.u16();
    return m;
  }
  case MsgType::config: {
    Config m;
    m.width = r.u32();
    m.height = r.u32();
    m.strategy = checked_enum<Strategy>(r.u8(), 2, "strategy");
    m.layout_w = r.u32();
    m.layout_h = r.u32();
    m.per_node_spp = r.u32();
    m.participant_index = r.u32();
    m.participant_count = r.u32();
    m.max_depth = r.u32();
    m.tile_w = r.u32();
    m.tile_h = r.u32();
    m.seed = r.u64();
    m.scene_name = r.str();
    return m;
  }
  case MsgType::camera_event: {
    CameraEvent m;
    m.frame_id = r.u64();
    m.camera = read_camera(r);
    return m;
  }
  case MsgType::scene_update: {
    SceneUpdateMsg m;
    SceneUpdate &u = m.update;
    u.frame_time = r.u64();
    const auto mesh_count = r.u32();
    r.need(mesh_count, 8);
    u.meshes.resize(mesh_count);
    for (MeshDelta &d : u.meshes) {
      d.mesh_id = r.u32();
      const auto range_count = r.u32();
      r.need(range_count, 8);
      d.ranges.resize(range_count);
      for (VertexRange &vr : d.ranges) {
        vr.begin = r.u32();
        const auto count = r.u32();
        r.need(count, 12);
        vr.positions.resize(count);
        r.floats({reinterpret_cast<float *>(vr.positions.data()), std::size_t(count) * 3});
      }
    }
    const auto has_camera = r.u8();
    if (has_camera > 1)
      throw ProtocolError(DecodeStatus::malformed, "invalid camera flag");
    if (has_camera)
      u.camera = read_camera(r);
    return m;
  }
  case MsgType::radiance_buffer: {
    RadianceBufferMsg m;
    RadianceBuffer &b = m.buffer;
    b.frame_id = r.u64();
    m.participant = r.u32();
    b.width = r.u32();
    b.height = r.u32();
    b.spp = r.u32();
    const std::uint64_t floats = std::uint64_t(b.width) * b.height * 3;
    r.need(floats, 4);
    b.rgb.resize(floats);
    r.floats(b.rgb);
    return m;
  }
  case MsgType::frame_image: {
    FrameImage m;
    m.frame_id = r.u64();
    m.encoding = checked_enum<ImageEncoding>(r.u8(), 3, "image encoding");
    m.width = r.u32();
    m.height = r.u32();
    m.bytes = r.bytes();
    return m;
  }
  case MsgType::stats: {
    Stats m;
    m.frame_id = r.u64();
    const auto n = r.u32();
    r.need(n, 12);
    m.fields.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string name = r.str();
      const double v = r.f64();
      m.fields.emplace_back(std::move(name), v);
    }
    return m;
  }
  case MsgType::shutdown:
    return Shutdown{r.str()};
  }
  throw ProtocolError(DecodeStatus::unknown_type, "unknown message type");
}

bool known_type(std::uint8_t t)
{
  return t >= static_cast<std::uint8_t>(MsgType::hello)
      && t <= static_cast<std::uint8_t>(MsgType::shutdown);
}

std::uint32_t read_len(std::span<const std::uint8_t> b)
{
  return std::uint32_t(b[5]) | (std::uint32_t(b[6]) << 8) | (std::uint32_t(b[7]) << 16)
      | (std::uint32_t(b[8]) << 24);
}

} // namespace

std::vector<std::uint8_t> encode_payload(const Message &message)
{
  std::vector<std::uint8_t> out;
  Writer w(out);
  std::visit(PayloadWriter{w}, message);
  return out;
}

void encode_into(const Message &message, std::vector<std::uint8_t> &out)
{
  const std::size_t start = out.size();
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(static_cast<std::uint8_t>(type_of(message)));
  out.insert(out.end(), 4, 0);
  Writer w(out);
  std::visit(PayloadWriter{w}, message);
  const std::size_t len = out.size() - start - kHeaderSize;
  if (len > kMaxPayload) {
    out.resize(start);
    throw ProtocolError(DecodeStatus::oversize,
        std::string(to_string(type_of(message))) + " payload of " + std::to_string(len)
            + " bytes exceeds the 256 MiB limit");
  }
  for (int i = 0; i < 4; ++i)
    out[start + 5 + i] = static_cast<std::uint8_t>(len >> (8 * i));
}

std::vector<std::uint8_t> encode(const Message &message)
{
  std::vector<std::uint8_t> out;
  encode_into(message, out);
  return out;
}

Message decode_payload(MsgType type, std::span<const std::uint8_t> payload)
{
  if (!known_type(static_cast<std::uint8_t>(type)))
    throw ProtocolError(DecodeStatus::unknown_type, "unknown message type");
  Reader r(payload);
  Message m = read_payload(type, r);
  if (r.remaining() != 0)
    throw ProtocolError(DecodeStatus::length_mismatch,
        std::string(to_string(type)) + " payload has " + std::to_string(r.remaining())
            + " trailing bytes");
  return m;
}

DecodeResult decode(std::span<const std::uint8_t> bytes)
{
  DecodeResult result;
  const std::size_t magic_avail = std::min(bytes.size(), kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + std::ptrdiff_t(magic_avail), kMagic.begin())) {
    result.status = DecodeStatus::bad_magic;
    result.detail = "frame does not start with CPT1";
    return result;
  }
  if (bytes.size() < kHeaderSize) {
    result.status = DecodeStatus::incomplete;
    return result;
  }
  const std::uint8_t tag = bytes[4];
  if (!known_type(tag)) {
    result.status = DecodeStatus::unknown_type;
    result.detail = "message type " + std::to_string(tag);
    return result;
  }
  const std::uint32_t len = read_len(bytes);
  if (len > kMaxPayload) {
    result.status = DecodeStatus::oversize;
    result.detail = "declared payload of " + std::to_string(len) + " bytes";
    return result;
  }
  if (bytes.size() - kHeaderSize < len) {
    result.status = DecodeStatus::incomplete;
    return result;
  }
  try {
    result.message = decode_payload(static_cast<MsgType>(tag), bytes.subspan(kHeaderSize, len));
    result.status = DecodeStatus::ok;
    result.consumed = kHeaderSize + len;
  } catch (const ProtocolError &e) {
    result.status = e.kind;
    result.detail = e.what();
  } catch (const std::bad_alloc &) {
    result.status = DecodeStatus::malformed;
    result.detail = "allocation failed";
  }
  return result;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes)
{
  if (start_ > 0 && start_ >= buffer_.size() / 2) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + std::ptrdiff_t(start_));
    start_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameReader::next()
{
  DecodeResult r = decode(std::span<const std::uint8_t>(buffer_).subspan(start_));
  if (r.status == DecodeStatus::incomplete)
    return std::nullopt;
  if (r.status != DecodeStatus::ok)
    throw ProtocolError(r.status, std::string(to_string(r.status)) + ": " + r.detail);
  start_ += r.consumed;
  return std::move(r.message);
}

void FrameOrderGuard::check(const Message &message)
{
  const auto id = frame_id_of(message);
  if (!id)
    return;
  auto &last = last_[message.index() + 1];
  if (last && *id <= *last)
    throw ProtocolError(DecodeStatus::out_of_order,
        std::string(to_string(type_of(message))) + " frame id " + std::to_string(*id)
            + " does not follow " + std::to_string(*last));
  last = *id;
}

} // namespace cpt::proto
