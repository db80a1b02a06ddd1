// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cpt/render/scene.hpp"

namespace cpt {

// Loads a JSON scene description (schema documented in scenes/README.md),
// builds the mesh BVHs and, for animated scenes, poses the animated mesh at
// frame 0. Throws StructuralError on schema or invariant violations.
Scene load_scene(const std::filesystem::path &file);
Scene parse_scene(std::string_view json_text,
    const std::filesystem::path &base_dir = {},
    std::string name = {});

// Resolves `name` to <scene_dir>/<name>.json. Names may not contain path
// separators. Throws StructuralError if the file does not exist.
std::filesystem::path scene_path(const std::filesystem::path &scene_dir, std::string_view name);

} // namespace cpt
