// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/render/scene_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cpt/common/error.hpp"

namespace cpt {

namespace {

using nlohmann::json;

Vec3 vec3(const json &j, const char *what)
{
  if (!j.is_array() || j.size() != 3)
    throw StructuralError(std::string(what) + " must be a 3-element array");
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

template <typename T>
std::vector<T> read_blob(const std::filesystem::path &file)
{
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in)
    throw StructuralError("cannot open blob " + file.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size % sizeof(T) != 0)
    throw StructuralError("blob " + file.string() + " has a truncated record");
  std::vector<T> out(size / sizeof(T));
  in.seekg(0);
  in.read(reinterpret_cast<char *>(out.data()), std::streamsize(size));
  return out;
}

MaterialKind material_kind(const std::string &s)
{
  if (s == "diffuse")
    return MaterialKind::diffuse;
  if (s == "metal")
    return MaterialKind::metal;
  if (s == "dielectric")
    return MaterialKind::dielectric;
  if (s == "emissive")
    return MaterialKind::emissive;
  throw StructuralError("unknown material kind '" + s + "'");
}

TriangleMesh make_grid(const json &g)
{
  const Vec3 center = vec3(g.at("center"), "grid.center");
  const float sx = g.at("size").at(0).get<float>();
  const float sz = g.at("size").at(1).get<float>();
  const auto nx = g.at("resolution").at(0).get<std::uint32_t>();
  const auto nz = g.at("resolution").at(1).get<std::uint32_t>();
  if (nx == 0 || nz == 0)
    throw StructuralError("grid resolution must be positive");

  TriangleMesh mesh;
  mesh.positions.reserve(std::size_t(nx + 1) * (nz + 1));
  for (std::uint32_t j = 0; j <= nz; ++j)
    for (std::uint32_t i = 0; i <= nx; ++i)
      mesh.positions.push_back({center.x - 0.5f * sx + sx * float(i) / float(nx),
          center.y,
          center.z - 0.5f * sz + sz * float(j) / float(nz)});
  mesh.indices.reserve(std::size_t(nx) * nz * 2);
  for (std::uint32_t j = 0; j < nz; ++j) {
    for (std::uint32_t i = 0; i < nx; ++i) {
      const std::uint32_t v00 = j * (nx + 1) + i;
      const std::uint32_t v10 = v00 + 1;
      const std::uint32_t v01 = v00 + nx + 1;
      const std::uint32_t v11 = v01 + 1;
      mesh.indices.push_back({v00, v01, v10});
      mesh.indices.push_back({v10, v01, v11});
    }
  }
  return mesh;
}

Camera parse_camera(const json &j)
{
  Camera c;
  c.position = vec3(j.at("position"), "camera.position");
  c.look_at = vec3(j.at("look_at"), "camera.look_at");
  if (j.contains("up"))
    c.up = vec3(j.at("up"), "camera.up");
  c.vertical_fov = j.value("fov", c.vertical_fov);
  return c;
}

} // namespace

Scene parse_scene(std::string_view json_text, const std::filesystem::path &base_dir, std::string name)
{
  Scene scene;
  try {
    const json doc = json::parse(json_text);
    scene.name = doc.value("name", std::move(name));

    std::map<std::string, std::uint32_t> material_ids;
    for (const json &m : doc.at("materials")) {
      Material mat;
      mat.kind = material_kind(m.at("kind").get<std::string>());
      if (m.contains("albedo"))
        mat.albedo = vec3(m["albedo"], "material.albedo");
      mat.roughness = m.value("roughness", 0.f);
      mat.ior = m.value("ior", 1.5f);
      if (m.contains("emission"))
        mat.emission = vec3(m["emission"], "material.emission");
      const auto id = static_cast<std::uint32_t>(scene.materials.size());
      if (!material_ids.emplace(m.at("name").get<std::string>(), id).second)
        throw StructuralError("duplicate material name");
      scene.materials.push_back(mat);
    }
    auto material_ref = [&](const json &j) {
      const auto it = material_ids.find(j.at("material").get<std::string>());
      if (it == material_ids.end())
        throw StructuralError("unknown material '" + j.at("material").get<std::string>() + "'");
      return it->second;
    };

    for (const json &m : doc.value("meshes", json::array())) {
      TriangleMesh mesh;
      if (m.contains("grid")) {
        mesh = make_grid(m["grid"]);
      } else if (m.contains("positions_file")) {
        mesh.positions = read_blob<Vec3>(base_dir / m["positions_file"].get<std::string>());
        mesh.indices = read_blob<std::array<std::uint32_t, 3>>(
            base_dir / m.at("indices_file").get<std::string>());
      } else {
        for (const json &p : m.at("positions"))
          mesh.positions.push_back(vec3(p, "mesh.positions"));
        for (const json &t : m.at("indices"))
          mesh.indices.push_back({t.at(0).get<std::uint32_t>(),
              t.at(1).get<std::uint32_t>(),
              t.at(2).get<std::uint32_t>()});
      }
      mesh.material = material_ref(m);
      scene.meshes.push_back(std::move(mesh));
    }

    for (const json &s : doc.value("spheres", json::array()))
      scene.spheres.push_back(
          Sphere{vec3(s.at("center"), "sphere.center"), s.at("radius").get<float>(), material_ref(s)});

    for (const json &l : doc.value("lights", json::array()))
      scene.lights.push_back(QuadLight{vec3(l.at("corner"), "light.corner"),
          vec3(l.at("edge_u"), "light.edge_u"),
          vec3(l.at("edge_v"), "light.edge_v"),
          vec3(l.at("emission"), "light.emission")});

    if (doc.contains("environment")) {
      const json &e = doc["environment"];
      const std::string type = e.value("type", "constant");
      if (type == "constant") {
        scene.environment.kind = Environment::Kind::constant;
        scene.environment.top = vec3(e.at("radiance"), "environment.radiance");
      } else if (type == "gradient") {
        scene.environment.kind = Environment::Kind::gradient;
        scene.environment.top = vec3(e.at("top"), "environment.top");
        scene.environment.bottom = vec3(e.at("bottom"), "environment.bottom");
      } else {
        throw StructuralError("unknown environment type '" + type + "'");
      }
    }

    if (doc.contains("camera"))
      scene.camera = parse_camera(doc["camera"]);

    if (doc.contains("animation")) {
      const json &a = doc["animation"];
      if (a.value("type", "ripple") != "ripple")
        throw StructuralError("unknown animation type");
      RippleAnimation anim;
      anim.mesh = a.at("mesh").get<std::uint32_t>();
      anim.center = vec3(a.at("center"), "animation.center");
      anim.radius = a.at("radius").get<float>();
      anim.amplitude = a.at("amplitude").get<float>();
      anim.wavelength = a.at("wavelength").get<float>();
      anim.period_frames = a.at("period_frames").get<float>();
      if (anim.mesh >= scene.meshes.size())
        throw StructuralError("animation references unknown mesh");
      anim.rest_positions = scene.meshes[anim.mesh].positions;
      scene.meshes[anim.mesh].positions = anim.positions_at(0);
      scene.animation = std::move(anim);
    }
  } catch (const json::exception &e) {
    throw StructuralError(std::string("scene parse error: ") + e.what());
  }

  scene.validate();
  scene.build_acceleration();
  return scene;
}

Scene load_scene(const std::filesystem::path &file)
{
  std::ifstream in(file);
  if (!in)
    throw StructuralError("cannot open scene " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), file.parent_path(), file.stem().string());
}

std::filesystem::path scene_path(const std::filesystem::path &scene_dir, std::string_view name)
{
  if (name.empty() || name.find_first_of("/\\") != std::string_view::npos || name == "."
      || name == "..")
    throw StructuralError("invalid scene name '" + std::string(name) + "'");
  auto path = scene_dir / (std::string(name) + ".json");
  if (!std::filesystem::exists(path))
    throw StructuralError("unknown scene '" + std::string(name) + "'");
  return path;
}

} // namespace cpt
