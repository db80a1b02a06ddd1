// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "cpt/render/scene.hpp"

namespace cpt {

struct CameraKey
{
  std::uint64_t frame_id = 0;
  Camera camera;
};

// Scripted camera motion for the headless client.
//   hold:         each frame uses the latest keyframe at or before it.
//   linear_orbit: between keyframes, the offset from look_at is interpolated
//                 in spherical coordinates (azimuth about +y, elevation,
//                 radius) and look_at, up and fov linearly.
// Frames before the first keyframe use the first; after the last, the last.
struct CameraPath
{
  enum class Mode
  {
    hold,
    linear_orbit,
  };

  Mode mode = Mode::hold;
  std::vector<CameraKey> keys; // strictly increasing frame ids

  // Throws StructuralError on an empty path or non-increasing frame ids.
  void validate() const;
  Camera at(std::uint64_t frame_id) const;

  static CameraPath hold(const Camera &camera);
  // Turn of `degrees` about look_at, frame f at f / frames of the way.
  static CameraPath orbit(const Camera &start, std::uint64_t frames, float degrees = 360.f);
};

// JSON: {"mode": "hold" | "linear-orbit",
//        "keyframes": [{"frame": n, "position": [..], "look_at": [..], "up": [..], "fov": deg}]}
CameraPath parse_camera_path(std::string_view json_text);
CameraPath load_camera_path(const std::filesystem::path &file);

} // namespace cpt
