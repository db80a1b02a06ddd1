// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/cluster/camera_path.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cpt/common/error.hpp"

namespace cpt {

namespace {

struct Spherical
{
  float azimuth, elevation, radius;
};

Spherical to_spherical(const Vec3 &d)
{
  const float r = length(d);
  return {std::atan2(d.x, d.z), r > 0 ? std::asin(std::clamp(d.y / r, -1.f, 1.f)) : 0.f, r};
}

Vec3 from_spherical(const Spherical &s)
{
  const float c = std::cos(s.elevation);
  return Vec3{c * std::sin(s.azimuth), std::sin(s.elevation), c * std::cos(s.azimuth)} * s.radius;
}

Vec3 lerp(const Vec3 &a, const Vec3 &b, float t) { return a + (b - a) * t; }

Vec3 vec3_of(const nlohmann::json &j, const char *name)
{
  const auto &a = j.at(name);
  if (!a.is_array() || a.size() != 3)
    throw StructuralError(std::string("camera path field '") + name + "' must be a 3-array");
  return {a[0].get<float>(), a[1].get<float>(), a[2].get<float>()};
}

} // namespace

void CameraPath::validate() const
{
  if (keys.empty())
    throw StructuralError("camera path has no keyframes");
  for (std::size_t i = 1; i < keys.size(); ++i)
    if (keys[i].frame_id <= keys[i - 1].frame_id)
      throw StructuralError("camera path frame ids must be strictly increasing");
  for (const CameraKey &k : keys)
    cpt::validate(k.camera);
}

Camera CameraPath::at(std::uint64_t frame_id) const
{
  if (frame_id <= keys.front().frame_id)
    return keys.front().camera;
  if (frame_id >= keys.back().frame_id)
    return keys.back().camera;
  std::size_t i = 0;
  while (keys[i + 1].frame_id <= frame_id)
    ++i;
  const CameraKey &a = keys[i];
  if (mode == Mode::hold || a.frame_id == frame_id)
    return a.camera;
  const CameraKey &b = keys[i + 1];
  const float t = float(frame_id - a.frame_id) / float(b.frame_id - a.frame_id);

  Camera out;
  out.look_at = lerp(a.camera.look_at, b.camera.look_at, t);
  out.up = lerp(a.camera.up, b.camera.up, t);
  out.vertical_fov = a.camera.vertical_fov + (b.camera.vertical_fov - a.camera.vertical_fov) * t;
  const Spherical sa = to_spherical(a.camera.position - a.camera.look_at);
  const Spherical sb = to_spherical(b.camera.position - b.camera.look_at);
  // Azimuths are unwrapped so the orbit takes the short way unless the keys
  // were written as an explicit multi-step turn.
  float daz = sb.azimuth - sa.azimuth;
  if (daz > kPi)
    daz -= 2 * kPi;
  if (daz < -kPi)
    daz += 2 * kPi;
  const Spherical s{sa.azimuth + daz * t,
      sa.elevation + (sb.elevation - sa.elevation) * t,
      sa.radius + (sb.radius - sa.radius) * t};
  out.position = out.look_at + from_spherical(s);
  return out;
}

CameraPath CameraPath::hold(const Camera &camera) { return {Mode::hold, {{0, camera}}}; }

CameraPath CameraPath::orbit(const Camera &start, std::uint64_t frames, float degrees)
{
  CameraPath path;
  path.mode = Mode::linear_orbit;
  frames = std::max<std::uint64_t>(frames, 1);
  // Keys at most 60 degrees apart so each segment turns the intended way.
  // Each key's angle follows from its own frame, so the turn rate is uniform.
  const auto segments = std::uint64_t(std::max(1, int(std::ceil(std::abs(degrees) / 60.f))));
  const Spherical s0 = to_spherical(start.position - start.look_at);
  for (std::uint64_t i = 0; i <= segments; ++i) {
    const std::uint64_t f = frames * i / segments;
    if (!path.keys.empty() && f <= path.keys.back().frame_id)
      continue;
    Spherical s = s0;
    s.azimuth += degrees * kPi / 180.f * float(double(f) / double(frames));
    Camera c = start;
    c.position = start.look_at + from_spherical(s);
    path.keys.push_back({f, c});
  }
  return path;
}

CameraPath parse_camera_path(std::string_view json_text)
{
  CameraPath path;
  try {
    const auto j = nlohmann::json::parse(json_text);
    const std::string mode = j.value("mode", "hold");
    if (mode == "hold")
      path.mode = CameraPath::Mode::hold;
    else if (mode == "linear-orbit")
      path.mode = CameraPath::Mode::linear_orbit;
    else
      throw StructuralError("unknown camera path mode '" + mode + "'");
    for (const auto &k : j.at("keyframes")) {
      CameraKey key;
      key.frame_id = k.at("frame").get<std::uint64_t>();
      key.camera.position = vec3_of(k, "position");
      key.camera.look_at = vec3_of(k, "look_at");
      key.camera.up = k.contains("up") ? vec3_of(k, "up") : Vec3{0, 1, 0};
      key.camera.vertical_fov = k.at("fov").get<float>();
      path.keys.push_back(key);
    }
  } catch (const nlohmann::json::exception &e) {
    throw StructuralError(std::string("camera path: ") + e.what());
  }
  path.validate();
  return path;
}

CameraPath load_camera_path(const std::filesystem::path &file)
{
  std::ifstream in(file);
  if (!in)
    throw StructuralError("cannot read camera path " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_camera_path(ss.str());
}

} // namespace cpt
