#include "render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kin::render {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Basis {
  Vec3 forward, right, up;
};

Basis camera_basis(const Camera& cam) {
  const Vec3 f = normalized(cam.look_at - cam.position);
  const Vec3 r = normalized(cross(f, cam.up));
  return {f, r, cross(r, f)};
}

std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c,
                                 double radius) {
  const Vec3 oc = o - c;
  const double b = dot(oc, d);
  const double q = dot(oc, oc) - radius * radius;
  const double disc = b * b - q;
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t <= 0.0) return std::nullopt;
  return t;
}

struct SurfaceHit {
  double t = 0.0;
  const Capsule* capsule = nullptr;  // null for the ground plane
};

std::optional<SurfaceHit> nearest_hit(const Scene& scene, const Vec3& o,
                                      const Vec3& d, double near, double far) {
  std::optional<SurfaceHit> best;
  for (const Capsule& cap : scene.capsules) {
    const auto t = ray_capsule(o, d, cap);
    if (t && *t >= near && *t <= far && (!best || *t < best->t)) {
      best = SurfaceHit{*t, &cap};
    }
  }
  if (scene.ground_plane && std::abs(d.z) > 1e-12) {
    const double t = (scene.ground_z - o.z) / d.z;
    if (t >= near && t <= far && (!best || t < best->t)) {
      best = SurfaceHit{t, nullptr};
    }
  }
  return best;
}

} // namespace

void validate(const Camera& cam) {
  if (cam.width < 1 || cam.height < 1) {
    throw std::invalid_argument("camera: resolution must be at least 1x1");
  }
  if (!(cam.near > 0.0) || !(cam.far > cam.near)) {
    throw std::invalid_argument("camera: need 0 < near < far");
  }
  if (!(cam.fov_y > 0.0) || !(cam.fov_y < kPi)) {
    throw std::invalid_argument("camera: fov_y must lie in (0, pi)");
  }
}

std::vector<Camera> default_rig(const RigParams& params) {
  if (params.count < 1) {
    throw std::invalid_argument("default_rig: camera count must be >= 1");
  }
  if (!(params.radius > 0.0)) {
    throw std::invalid_argument("default_rig: rig radius must be positive");
  }
  std::vector<Camera> rig;
  rig.reserve(static_cast<std::size_t>(params.count));
  for (int k = 0; k < params.count; ++k) {
    const double azimuth = 2.0 * kPi * k / params.count;
    Camera cam;
    cam.position = {params.radius * std::cos(azimuth),
                    params.radius * std::sin(azimuth), params.height};
    cam.look_at = params.target;
    cam.up = {0.0, 0.0, 1.0};
    cam.fov_y = params.fov_y;
    cam.width = params.width;
    cam.height = params.height_px;
    cam.near = params.near;
    cam.far = params.far;
    validate(cam);
    rig.push_back(cam);
  }
  return rig;
}

std::optional<PixelHit> project(const Camera& cam, const Vec3& p) {
  const Basis basis = camera_basis(cam);
  const Vec3 v = p - cam.position;
  const double zf = dot(v, basis.forward);
  if (zf <= 0.0) return std::nullopt;
  const double tan_y = std::tan(0.5 * cam.fov_y);
  const double tan_x = tan_y * cam.width / cam.height;
  const double ndc_x = dot(v, basis.right) / (zf * tan_x);
  const double ndc_y = dot(v, basis.up) / (zf * tan_y);
  PixelHit hit;
  hit.col = 0.5 * (ndc_x + 1.0) * cam.width;
  hit.row = 0.5 * (1.0 - ndc_y) * cam.height;
  hit.depth = norm(v);
  return hit;
}

std::optional<double> ray_capsule(const Vec3& o, const Vec3& d, const Capsule& cap) {
  const Vec3 ba = cap.b - cap.a;
  const double baba = dot(ba, ba);
  if (baba < 1e-24) {
    return ray_sphere(o, d, cap.a, cap.radius);
  }

  double best = -1.0;
  const Vec3 oa = o - cap.a;
  const double bard = dot(ba, d);
  const double baoa = dot(ba, oa);
  const double a = baba - bard * bard;
  if (a > 1e-12 * baba) {
    const double b = baba * dot(oa, d) - baoa * bard;
    const double c = baba * dot(oa, oa) - baoa * baoa - cap.radius * cap.radius * baba;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / a;
      const double y = baoa + t * bard;
      if (t > 0.0 && y >= 0.0 && y <= baba) {
        best = t;
      }
    }
  }
  for (const Vec3* center : {&cap.a, &cap.b}) {
    const auto t = ray_sphere(o, d, *center, cap.radius);
    if (t && (best < 0.0 || *t < best)) {
      best = *t;
    }
  }
  if (best < 0.0) return std::nullopt;
  return best;
}

Image render_depth(const Scene& scene, const Camera& cam) {
  validate(cam);
  const Basis basis = camera_basis(cam);
  const double tan_y = std::tan(0.5 * cam.fov_y);
  const double tan_x = tan_y * cam.width / cam.height;

  Image img;
  img.width = cam.width;
  img.height = cam.height;
  img.pixels.assign(static_cast<std::size_t>(cam.width) * cam.height,
                    static_cast<float>(cam.far));
  for (int r = 0; r < cam.height; ++r) {
    const double ndc_y = 1.0 - 2.0 * (r + 0.5) / cam.height;
    for (int c = 0; c < cam.width; ++c) {
      const double ndc_x = 2.0 * (c + 0.5) / cam.width - 1.0;
      const Vec3 dir = normalized(basis.forward + basis.right * (ndc_x * tan_x) +
                                  basis.up * (ndc_y * tan_y));
      const auto hit = nearest_hit(scene, cam.position, dir, cam.near, cam.far);
      if (hit) {
        img.pixels[static_cast<std::size_t>(r) * cam.width + c] =
            static_cast<float>(hit->t);
      }
    }
  }
  return img;
}

Image render_gray(const Scene& scene, const Camera& cam, const Vec3& light_dir,
                  double ambient) {
  validate(cam);
  const Basis basis = camera_basis(cam);
  const double tan_y = std::tan(0.5 * cam.fov_y);
  const double tan_x = tan_y * cam.width / cam.height;
  const Vec3 light = normalized(light_dir);

  Image img;
  img.width = cam.width;
  img.height = cam.height;
  img.pixels.assign(static_cast<std::size_t>(cam.width) * cam.height, 1.0f);
  for (int r = 0; r < cam.height; ++r) {
    const double ndc_y = 1.0 - 2.0 * (r + 0.5) / cam.height;
    for (int c = 0; c < cam.width; ++c) {
      const double ndc_x = 2.0 * (c + 0.5) / cam.width - 1.0;
      const Vec3 dir = normalized(basis.forward + basis.right * (ndc_x * tan_x) +
                                  basis.up * (ndc_y * tan_y));
      const auto hit = nearest_hit(scene, cam.position, dir, cam.near, cam.far);
      if (!hit) continue;

      const Vec3 p = cam.position + dir * hit->t;
      Vec3 normal{0.0, 0.0, 1.0};
      double luma = scene.ground_luma;
      if (hit->capsule) {
        const Capsule& cap = *hit->capsule;
        const Vec3 ba = cap.b - cap.a;
        const double baba = dot(ba, ba);
        Vec3 q = cap.a;
        if (baba > 1e-24) {
          const double y = std::clamp(dot(p - cap.a, ba) / baba, 0.0, 1.0);
          q = cap.a + ba * y;
        }
        normal = normalized(p - q);
        luma = cap.luma;
      }
      const double lambert = std::max(0.0, dot(normal, light));
      const double value = std::clamp(luma * lambert + ambient, 0.0, 1.0);
      img.pixels[static_cast<std::size_t>(r) * cam.width + c] =
          static_cast<float>(value);
    }
  }
  return img;
}

double palette_luma(const std::string& color) {
  // Rec. 709 luma of the nominal palette RGB values.
  if (color == "black") return 0.0;
  if (color == "white") return 1.0;
  if (color == "red") return 0.2126;
  if (color == "orange") return 0.5702;
  if (color == "blue") return 0.0722;
  if (color == "green") return 0.7152;
  if (color == "yellow") return 0.9278;
  if (color == "indigo") return 0.0995;
  throw std::invalid_argument("palette_luma: unknown color tag '" + color + "'");
}

Scene scene_from_chain(const chain::ChainConfig& config, const chain::LinkPoses& poses,
                       double link_radius, bool ground_plane) {
  if (!(link_radius > 0.0)) {
    throw std::invalid_argument("scene_from_chain: link radius must be positive");
  }
  Scene scene;
  scene.ground_plane = ground_plane;
  scene.ground_z = -link_radius;
  scene.capsules.reserve(config.lengths.size());
  for (std::size_t i = 0; i + 1 < poses.endpoints.size(); ++i) {
    Capsule cap;
    cap.a = poses.endpoints[i];
    cap.b = poses.endpoints[i + 1];
    cap.radius = link_radius;
    cap.luma = palette_luma(config.colors[i]);
    scene.capsules.push_back(cap);
  }
  return scene;
}

} // namespace kin::render
