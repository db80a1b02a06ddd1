// Copyright 2026 The clusterpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpt/render/tracer.hpp"

#include <cmath>

#include "cpt/common/parallel.hpp"

namespace cpt {

namespace {

// Per-bounce random dimensions. Dimension 0/1 of bounce 0 are the pixel jitter.
enum Dim : std::uint32_t
{
  kDimLightPick = 0,
  kDimLightU = 1,
  kDimLightV = 2,
  kDimLobe = 3,
  kDimDirU = 4,
  kDimDirV = 5,
};

std::optional<float> intersect_sphere(const Sphere &s, const Ray &ray)
{
  const Vec3 oc = ray.origin - s.center;
  const float a = dot(ray.dir, ray.dir);
  const float half_b = dot(oc, ray.dir);
  const float c = dot(oc, oc) - s.radius * s.radius;
  const float disc = half_b * half_b - a * c;
  if (disc < 0.f)
    return std::nullopt;
  const float root = std::sqrt(disc);
  // Stable quadratic roots.
  const float q = half_b > 0.f ? -(half_b + root) : -(half_b - root);
  float t0 = q / a;
  float t1 = q != 0.f ? c / q : t0;
  if (t0 > t1)
    std::swap(t0, t1);
  if (t0 > ray.tmin && t0 < ray.tmax)
    return t0;
  if (t1 > ray.tmin && t1 < ray.tmax)
    return t1;
  return std::nullopt;
}

std::optional<float> intersect_quad(const QuadLight &q, const Ray &ray)
{
  const Vec3 n = cross(q.edge_u, q.edge_v);
  const float denom = dot(n, ray.dir);
  if (denom == 0.f)
    return std::nullopt;
  const float t = dot(n, q.corner - ray.origin) / denom;
  if (!(t > ray.tmin && t < ray.tmax))
    return std::nullopt;
  const Vec3 w = ray.origin + ray.dir * t - q.corner;
  const float nn = dot(n, n);
  const float a = dot(cross(w, q.edge_v), n) / nn;
  const float b = dot(cross(q.edge_u, w), n) / nn;
  if (a < 0.f || a > 1.f || b < 0.f || b > 1.f)
    return std::nullopt;
  return t;
}

Vec3 offset_point(const Vec3 &p, const Vec3 &n)
{
  const float scale = 1.f + std::max(std::abs(p.x), std::max(std::abs(p.y), std::abs(p.z)));
  return p + n * (1e-4f * scale);
}

Vec3 reflect(const Vec3 &d, const Vec3 &n) { return d - n * (2.f * dot(d, n)); }

// Fresnel reflectance for unpolarized light; eta = n_incident / n_transmitted.
float fresnel_dielectric(float cos_i, float eta, float &cos_t)
{
  const float sin2_t = eta * eta * std::max(0.f, 1.f - cos_i * cos_i);
  if (sin2_t >= 1.f) {
    cos_t = 0.f;
    return 1.f;
  }
  cos_t = std::sqrt(1.f - sin2_t);
  const float rs = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
  const float rp = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
  return 0.5f * (rs * rs + rp * rp);
}

Vec3 cosine_hemisphere(const Vec3 &n, float u1, float u2)
{
  const float r = std::sqrt(u1);
  const float phi = 2.f * kPi * u2;
  Vec3 t, b;
  make_basis(n, t, b);
  return normalize(t * (r * std::cos(phi)) + b * (r * std::sin(phi))
      + n * std::sqrt(std::max(0.f, 1.f - u1)));
}

Vec3 uniform_sphere(float u1, float u2)
{
  const float z = 1.f - 2.f * u1;
  const float r = std::sqrt(std::max(0.f, 1.f - z * z));
  const float phi = 2.f * kPi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

} // namespace

std::optional<SurfaceHit> intersect_scene(const Scene &scene, const Ray &ray_in)
{
  Ray ray = ray_in;
  std::optional<SurfaceHit> best;

  for (std::uint32_t m = 0; m < scene.meshes.size(); ++m) {
    if (auto h = intersect(scene.bvhs[m], scene.meshes[m], ray)) {
      ray.tmax = h->t;
      best = SurfaceHit{h->t,
          ray.origin + ray.dir * h->t,
          h->normal,
          SurfaceHit::Kind::mesh,
          m,
          h->primitive,
          scene.meshes[m].material};
    }
  }
  for (std::uint32_t s = 0; s < scene.spheres.size(); ++s) {
    const Sphere &sphere = scene.spheres[s];
    if (auto t = intersect_sphere(sphere, ray)) {
      ray.tmax = *t;
      const Vec3 p = ray.origin + ray.dir * *t;
      best = SurfaceHit{
          *t, p, normalize(p - sphere.center), SurfaceHit::Kind::sphere, s, 0, sphere.material};
    }
  }
  for (std::uint32_t l = 0; l < scene.lights.size(); ++l) {
    const QuadLight &light = scene.lights[l];
    if (auto t = intersect_quad(light, ray)) {
      ray.tmax = *t;
      best = SurfaceHit{
          *t, ray.origin + ray.dir * *t, light.normal(), SurfaceHit::Kind::light, l, 0, 0};
    }
  }
  return best;
}

bool occluded(const Scene &scene, const Ray &ray)
{
  for (std::uint32_t m = 0; m < scene.meshes.size(); ++m)
    if (occluded(scene.bvhs[m], scene.meshes[m], ray))
      return true;
  for (const Sphere &s : scene.spheres)
    if (intersect_sphere(s, ray))
      return true;
  for (const QuadLight &l : scene.lights)
    if (intersect_quad(l, ray))
      return true;
  return false;
}

Vec3 trace_path(const Scene &scene,
    Ray ray,
    const SampleRng &rng,
    std::uint32_t max_depth,
    RenderCounters *counters)
{
  Vec3 radiance{0.f};
  Vec3 throughput{1.f};
  bool specular = true; // camera rays and delta-like bounces skip MIS
  float bsdf_pdf = 0.f;
  const auto light_count = static_cast<std::uint32_t>(scene.lights.size());

  for (std::uint32_t depth = 1;; ++depth) {
    const auto hit = intersect_scene(scene, ray);
    if (!hit) {
      radiance += throughput * scene.environment.radiance(ray.dir);
      break;
    }

    if (hit->kind == SurfaceHit::Kind::light) {
      const QuadLight &light = scene.lights[hit->object];
      const float cos_l = -dot(ray.dir, hit->normal);
      if (cos_l > 0.f) {
        if (specular) {
          radiance += throughput * light.emission;
        } else {
          const float light_pdf = hit->t * hit->t / (cos_l * light.area() * float(light_count));
          const float weight = bsdf_pdf / (bsdf_pdf + light_pdf);
          radiance += throughput * light.emission * weight;
        }
      }
      break;
    }

    const Material &material = scene.materials[hit->material];
    if (material.kind == MaterialKind::emissive) {
      radiance += throughput * material.emission;
      break;
    }
    if (depth >= max_depth)
      break;

    const bool front = dot(ray.dir, hit->normal) < 0.f;
    const Vec3 n = front ? hit->normal : -hit->normal;
    const Vec3 wo = -ray.dir;
    bool alive = true;

    switch (material.kind) {
    case MaterialKind::diffuse: {
      if (light_count > 0) {
        const std::uint32_t pick = std::min(light_count - 1,
            static_cast<std::uint32_t>(rng.uniform(depth, kDimLightPick) * float(light_count)));
        const QuadLight &light = scene.lights[pick];
        const Vec3 target = light.corner + light.edge_u * rng.uniform(depth, kDimLightU)
            + light.edge_v * rng.uniform(depth, kDimLightV);
        const Vec3 origin = offset_point(hit->point, n);
        const Vec3 to_light = target - origin;
        const float dist2 = dot(to_light, to_light);
        const float dist = std::sqrt(dist2);
        const Vec3 wi = to_light / dist;
        const float cos_s = dot(wi, n);
        const float cos_l = -dot(wi, light.normal());
        if (cos_s > 0.f && cos_l > 0.f) {
          Ray shadow{origin, wi, 0.f, dist * (1.f - 1e-4f)};
          if (!occluded(scene, shadow)) {
            const float light_pdf = dist2 / (cos_l * light.area() * float(light_count));
            const float brdf_pdf = cos_s / kPi;
            const float weight = light_pdf / (light_pdf + brdf_pdf);
            radiance += throughput * material.albedo * light.emission
                * (cos_s / (kPi * light_pdf) * weight);
          }
        }
      }
      const Vec3 wi = cosine_hemisphere(n, rng.uniform(depth, kDimDirU), rng.uniform(depth, kDimDirV));
      const float cos_o = dot(wi, n);
      if (!(cos_o > 0.f)) {
        alive = false;
        break;
      }
      throughput *= material.albedo;
      bsdf_pdf = cos_o / kPi;
      specular = false;
      ray = Ray{offset_point(hit->point, n), wi};
      break;
    }
    case MaterialKind::metal: {
      Vec3 wi = reflect(ray.dir, n);
      if (material.roughness > 0.f)
        wi = normalize(wi
            + uniform_sphere(rng.uniform(depth, kDimDirU), rng.uniform(depth, kDimDirV))
                * material.roughness);
      if (!(dot(wi, n) > 0.f)) {
        alive = false;
        break;
      }
      throughput *= material.albedo;
      specular = true;
      ray = Ray{offset_point(hit->point, n), wi};
      break;
    }
    case MaterialKind::dielectric: {
      const float eta = front ? 1.f / material.ior : material.ior;
      const float cos_i = dot(wo, n);
      float cos_t = 0.f;
      const float reflectance = fresnel_dielectric(cos_i, eta, cos_t);
      if (rng.uniform(depth, kDimLobe) < reflectance) {
        ray = Ray{offset_point(hit->point, n), reflect(ray.dir, n)};
      } else {
        const Vec3 wt = normalize(ray.dir * eta + n * (eta * cos_i - cos_t));
        ray = Ray{offset_point(hit->point, -n), wt};
      }
      throughput *= material.albedo;
      specular = true;
      break;
    }
    case MaterialKind::emissive:
      break;
    }
    if (!alive)
      break;
  }

  if (counters)
    counters->paths.fetch_add(1, std::memory_order_relaxed);
  return radiance;
}

Vec3 render_pixel(const Scene &scene,
    const Camera &camera,
    const RenderRequest &request,
    std::uint32_t px,
    std::uint32_t py,
    RenderCounters *counters)
{
  double sx = 0.0, sy = 0.0, sz = 0.0;
  for (std::uint32_t s = 0; s < request.spp; ++s) {
    const SampleRng rng(request.seed_namespace, px, py, request.first_sample + s);
    const Ray ray = sample_camera_ray(
        camera, request.dims, px, py, rng.uniform(0, 0), rng.uniform(0, 1), request.transform);
    const Vec3 l = trace_path(scene, ray, rng, request.max_depth, counters);
    if (!is_finite(l)) {
      if (counters)
        counters->nonfinite_samples.fetch_add(1, std::memory_order_relaxed);
      continue;
    }
    sx += l.x;
    sy += l.y;
    sz += l.z;
  }
  return {float(sx), float(sy), float(sz)};
}

RadianceBuffer render_region(const Scene &scene,
    const Camera &camera,
    const RenderRequest &request,
    RenderCounters *counters)
{
  const PixelRect rect = request.region();
  RadianceBuffer out(rect.width, rect.height, request.spp, request.frame_id);
  const unsigned threads = request.threads ? request.threads : default_thread_count();
  parallel_for(rect.height, threads, [&](std::size_t row) {
    const auto y = static_cast<std::uint32_t>(row);
    for (std::uint32_t x = 0; x < rect.width; ++x)
      out.set(x, y, render_pixel(scene, camera, request, rect.x + x, rect.y + y, counters));
  });
  return out;
}

} // namespace cpt
