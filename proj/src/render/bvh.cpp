// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/render/bvh.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string>

#include "cpt/common/error.hpp"

namespace cpt {

std::uint64_t topology_hash(const TriangleMesh &mesh)
{
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto &tri : mesh.indices)
    for (std::uint32_t v : tri)
      for (int b = 0; b < 4; ++b) {
        h ^= (v >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ull;
      }
  return h;
}

Aabb TriangleMesh::triangle_bounds(std::uint32_t tri) const
{
  Aabb b;
  for (std::uint32_t v : indices[tri])
    b.extend(positions[v]);
  return b;
}

std::optional<TriangleHit> intersect_triangle(
    const Ray &ray, const Vec3 &p0, const Vec3 &p1, const Vec3 &p2)
{
  const Vec3 e1 = p1 - p0;
  const Vec3 e2 = p2 - p0;
  const Vec3 n = cross(e1, e2);
  if (n.x == 0.f && n.y == 0.f && n.z == 0.f)
    return std::nullopt;

  const Vec3 pvec = cross(ray.dir, e2);
  const float det = dot(e1, pvec);
  if (det == 0.f || !std::isfinite(det))
    return std::nullopt;
  const float inv_det = 1.f / det;

  const Vec3 tvec = ray.origin - p0;
  const float u = dot(tvec, pvec) * inv_det;
  if (!(u >= 0.f && u <= 1.f))
    return std::nullopt;
  const Vec3 qvec = cross(tvec, e1);
  const float v = dot(ray.dir, qvec) * inv_det;
  if (!(v >= 0.f && u + v <= 1.f))
    return std::nullopt;
  const float t = dot(e2, qvec) * inv_det;
  if (!(t > ray.tmin && t < ray.tmax))
    return std::nullopt;
  return TriangleHit{t, u, v};
}

namespace {

constexpr int kBins = 16;
constexpr std::uint32_t kMaxLeafSize = 8;
constexpr float kTraversalCost = 1.f;
// Past this depth only balanced splits are made, which bounds the tree depth
// by kMaxSahDepth + log2(n) and keeps it within the traversal stack.
constexpr int kMaxSahDepth = 48;
constexpr std::size_t kStackSize = 128;

struct BuildRef
{
  Aabb bounds;
  Vec3 centroid;
};

class Builder
{
 public:
  Builder(const TriangleMesh &mesh, Bvh &bvh) : mesh_(mesh), bvh_(bvh) {}

  void run()
  {
    const auto n = static_cast<std::uint32_t>(mesh_.triangle_count());
    refs_.resize(n);
    bvh_.degenerate_count = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto &tri = mesh_.indices[i];
      const Vec3 &a = mesh_.positions[tri[0]];
      const Vec3 &b = mesh_.positions[tri[1]];
      const Vec3 &c = mesh_.positions[tri[2]];
      const Vec3 area = cross(b - a, c - a);
      if (area.x == 0.f && area.y == 0.f && area.z == 0.f)
        ++bvh_.degenerate_count;
      refs_[i].bounds = mesh_.triangle_bounds(i);
      refs_[i].centroid = refs_[i].bounds.center();
    }

    bvh_.prim_index.resize(n);
    std::iota(bvh_.prim_index.begin(), bvh_.prim_index.end(), 0u);
    bvh_.nodes.clear();
    bvh_.nodes.reserve(2 * std::size_t(n));
    bvh_.nodes.emplace_back();
    build(0, 0, n, 0);
    bvh_.nodes.shrink_to_fit();
    bvh_.triangle_count = n;
    bvh_.topology_hash = topology_hash(mesh_);
  }

 private:
  void build(std::uint32_t node_index, std::uint32_t begin, std::uint32_t end, int depth)
  {
    Aabb bounds, centroid_bounds;
    for (std::uint32_t i = begin; i < end; ++i) {
      const BuildRef &r = refs_[bvh_.prim_index[i]];
      bounds.extend(r.bounds);
      centroid_bounds.extend(r.centroid);
    }
    bvh_.nodes[node_index].bounds = bounds;

    const std::uint32_t count = end - begin;
    if (count <= 2) {
      make_leaf(node_index, begin, count);
      return;
    }

    std::uint32_t mid = begin;
    if (depth >= kMaxSahDepth
        || !find_sah_split(begin, end, bounds, centroid_bounds, mid)) {
      if (count <= kMaxLeafSize) {
        make_leaf(node_index, begin, count);
        return;
      }
      // Coincident centroids or no profitable split: fall back to an even
      // split along the widest centroid axis.
      const int axis = widest_axis(centroid_bounds);
      mid = begin + count / 2;
      std::nth_element(bvh_.prim_index.begin() + begin,
          bvh_.prim_index.begin() + mid,
          bvh_.prim_index.begin() + end,
          [&](std::uint32_t a, std::uint32_t b) {
            const float ca = refs_[a].centroid[axis], cb = refs_[b].centroid[axis];
            return ca < cb || (ca == cb && a < b);
          });
    }

    const auto left = static_cast<std::uint32_t>(bvh_.nodes.size());
    bvh_.nodes.emplace_back();
    bvh_.nodes.emplace_back();
    bvh_.nodes[node_index].first = left;
    bvh_.nodes[node_index].count = 0;
    build(left, begin, mid, depth + 1);
    build(left + 1, mid, end, depth + 1);
  }

  void make_leaf(std::uint32_t node_index, std::uint32_t begin, std::uint32_t count)
  {
    bvh_.nodes[node_index].first = begin;
    bvh_.nodes[node_index].count = count;
  }

  static int widest_axis(const Aabb &b)
  {
    const Vec3 d = b.hi - b.lo;
    return d.x >= d.y && d.x >= d.z ? 0 : (d.y >= d.z ? 1 : 2);
  }

  bool find_sah_split(std::uint32_t begin,
      std::uint32_t end,
      const Aabb &bounds,
      const Aabb &centroid_bounds,
      std::uint32_t &mid)
  {
    const std::uint32_t count = end - begin;
    float best_cost = float(count);
    int best_axis = -1;
    int best_bin = 0;

    for (int axis = 0; axis < 3; ++axis) {
      const float lo = centroid_bounds.lo[axis];
      const float extent = centroid_bounds.hi[axis] - lo;
      if (!(extent > 0.f))
        continue;
      const float scale = kBins / extent;

      std::array<Aabb, kBins> bin_bounds{};
      std::array<std::uint32_t, kBins> bin_count{};
      for (std::uint32_t i = begin; i < end; ++i) {
        const BuildRef &r = refs_[bvh_.prim_index[i]];
        const int b = bin_of(r.centroid[axis], lo, scale);
        bin_bounds[b].extend(r.bounds);
        ++bin_count[b];
      }

      std::array<float, kBins> right_cost{};
      Aabb acc;
      std::uint32_t acc_count = 0;
      for (int b = kBins - 1; b > 0; --b) {
        acc.extend(bin_bounds[b]);
        acc_count += bin_count[b];
        right_cost[b] = acc.half_area() * float(acc_count);
      }
      acc = Aabb{};
      acc_count = 0;
      const float inv_area = 1.f / std::max(bounds.half_area(), 1e-30f);
      for (int b = 0; b < kBins - 1; ++b) {
        acc.extend(bin_bounds[b]);
        acc_count += bin_count[b];
        if (acc_count == 0 || acc_count == count)
          continue;
        const float cost = kTraversalCost
            + (acc.half_area() * float(acc_count) + right_cost[b + 1]) * inv_area;
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_bin = b;
        }
      }
    }

    if (best_axis < 0)
      return false;

    const float lo = centroid_bounds.lo[best_axis];
    const float scale = kBins / (centroid_bounds.hi[best_axis] - lo);
    auto it = std::partition(bvh_.prim_index.begin() + begin,
        bvh_.prim_index.begin() + end,
        [&](std::uint32_t p) {
          return bin_of(refs_[p].centroid[best_axis], lo, scale) <= best_bin;
        });
    mid = static_cast<std::uint32_t>(it - bvh_.prim_index.begin());
    return mid != begin && mid != end;
  }

  static int bin_of(float c, float lo, float scale)
  {
    const int b = static_cast<int>((c - lo) * scale);
    return std::clamp(b, 0, kBins - 1);
  }

  const TriangleMesh &mesh_;
  Bvh &bvh_;
  std::vector<BuildRef> refs_;
};

void check_mesh(const TriangleMesh &mesh)
{
  if (mesh.indices.empty())
    throw StructuralError("cannot build a BVH over an empty mesh");
  const auto vcount = mesh.positions.size();
  for (const auto &tri : mesh.indices)
    for (std::uint32_t v : tri)
      if (v >= vcount)
        throw StructuralError("triangle index " + std::to_string(v)
            + " out of range for " + std::to_string(vcount) + " vertices");
}

constexpr float gamma3()
{
  constexpr float eps = std::numeric_limits<float>::epsilon() * 0.5f;
  return 3 * eps / (1 - 3 * eps);
}

struct RayBoxTester
{
  Vec3 origin;
  Vec3 inv_dir;
  float tmin;

  explicit RayBoxTester(const Ray &ray)
      : origin(ray.origin),
        inv_dir(1.f / ray.dir.x, 1.f / ray.dir.y, 1.f / ray.dir.z),
        tmin(ray.tmin)
  {}

  // Conservative slab test; NaNs from 0 * inf leave the interval untouched.
  bool hit(const Aabb &box, float tmax, float &entry) const
  {
    float t0 = tmin, t1 = tmax;
    for (int a = 0; a < 3; ++a) {
      float tn = (box.lo[a] - origin[a]) * inv_dir[a];
      float tf = (box.hi[a] - origin[a]) * inv_dir[a];
      if (tn > tf)
        std::swap(tn, tf);
      tf *= 1.f + 2.f * gamma3();
      t0 = tn > t0 ? tn : t0;
      t1 = tf < t1 ? tf : t1;
      if (t0 > t1)
        return false;
    }
    entry = t0;
    return true;
  }
};

} // namespace

Bvh build_bvh(const TriangleMesh &mesh)
{
  check_mesh(mesh);
  Bvh bvh;
  Builder(mesh, bvh).run();
  return bvh;
}

void rebuild_bvh(Bvh &bvh, const TriangleMesh &mesh)
{
  check_mesh(mesh);
  const auto generation = bvh.generation;
  Builder(mesh, bvh).run();
  bvh.generation = generation + 1;
}

void refit_bvh(Bvh &bvh, const TriangleMesh &mesh)
{
  if (mesh.triangle_count() != bvh.triangle_count || bvh.nodes.empty())
    throw StructuralError("refit topology mismatch: BVH has "
        + std::to_string(bvh.triangle_count) + " triangles, mesh has "
        + std::to_string(mesh.triangle_count()));
  if (topology_hash(mesh) != bvh.topology_hash)
    throw StructuralError("refit topology mismatch: triangle indices differ from the build");

  for (std::size_t i = bvh.nodes.size(); i-- > 0;) {
    BvhNode &node = bvh.nodes[i];
    Aabb b;
    if (node.is_leaf()) {
      for (std::uint32_t k = 0; k < node.count; ++k)
        b.extend(mesh.triangle_bounds(bvh.prim_index[node.first + k]));
    } else {
      b = bvh.nodes[node.first].bounds;
      b.extend(bvh.nodes[node.first + 1].bounds);
    }
    node.bounds = b;
  }
}

Bvh refitted(Bvh bvh, const TriangleMesh &mesh)
{
  refit_bvh(bvh, mesh);
  return bvh;
}

std::optional<MeshHit> intersect(const Bvh &bvh, const TriangleMesh &mesh, const Ray &ray)
{
  if (bvh.nodes.empty())
    return std::nullopt;

  const RayBoxTester tester(ray);
  float best_t = ray.tmax;
  std::uint32_t best_prim = 0;
  float best_u = 0.f, best_v = 0.f;
  bool found = false;

  std::array<std::uint32_t, kStackSize> stack;
  int top = 0;
  float entry = 0.f;
  if (!tester.hit(bvh.nodes[0].bounds, best_t, entry))
    return std::nullopt;
  stack[top++] = 0;

  while (top > 0) {
    const BvhNode &node = bvh.nodes[stack[--top]];
    if (!tester.hit(node.bounds, best_t, entry))
      continue;
    if (node.is_leaf()) {
      for (std::uint32_t k = 0; k < node.count; ++k) {
        const std::uint32_t prim = bvh.prim_index[node.first + k];
        const auto &tri = mesh.indices[prim];
        auto h = intersect_triangle(
            ray, mesh.positions[tri[0]], mesh.positions[tri[1]], mesh.positions[tri[2]]);
        if (h && (h->t < best_t || (h->t == best_t && (!found || prim < best_prim)))) {
          found = true;
          best_t = h->t;
          best_prim = prim;
          best_u = h->u;
          best_v = h->v;
        }
      }
      continue;
    }

    float entry_l = 0.f, entry_r = 0.f;
    const bool hit_l = tester.hit(bvh.nodes[node.first].bounds, best_t, entry_l);
    const bool hit_r = tester.hit(bvh.nodes[node.first + 1].bounds, best_t, entry_r);
    if (hit_l && hit_r) {
      // Push the far child first so the near one is popped next.
      if (entry_l <= entry_r) {
        stack[top++] = node.first + 1;
        stack[top++] = node.first;
      } else {
        stack[top++] = node.first;
        stack[top++] = node.first + 1;
      }
    } else if (hit_l) {
      stack[top++] = node.first;
    } else if (hit_r) {
      stack[top++] = node.first + 1;
    }
  }

  if (!found)
    return std::nullopt;
  const auto &tri = mesh.indices[best_prim];
  const Vec3 &p0 = mesh.positions[tri[0]];
  const Vec3 n = normalize(cross(mesh.positions[tri[1]] - p0, mesh.positions[tri[2]] - p0));
  return MeshHit{best_t, best_prim, best_u, best_v, n};
}

bool occluded(const Bvh &bvh, const TriangleMesh &mesh, const Ray &ray)
{
  if (bvh.nodes.empty())
    return false;
  const RayBoxTester tester(ray);
  std::array<std::uint32_t, kStackSize> stack;
  int top = 0;
  stack[top++] = 0;
  float entry = 0.f;
  while (top > 0) {
    const BvhNode &node = bvh.nodes[stack[--top]];
    if (!tester.hit(node.bounds, ray.tmax, entry))
      continue;
    if (node.is_leaf()) {
      for (std::uint32_t k = 0; k < node.count; ++k) {
        const auto &tri = mesh.indices[bvh.prim_index[node.first + k]];
        if (intersect_triangle(
                ray, mesh.positions[tri[0]], mesh.positions[tri[1]], mesh.positions[tri[2]]))
          return true;
      }
    } else {
      stack[top++] = node.first;
      stack[top++] = node.first + 1;
    }
  }
  return false;
}

} // namespace cpt
