#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chain.hpp"
#include "geom.hpp"

namespace kin::render {

struct Camera {
  Vec3 position;
  Vec3 look_at;
  Vec3 up{0.0, 0.0, 1.0};
  double fov_y = 0.0;  // radians
  int width = 0;
  int height = 0;
  double near = 0.1;
  double far = 10.0;
};

void validate(const Camera& cam);

// Row-major float image. Depth pixels hold the metric distance along the
// viewing ray to the first hit (misses encode as `far`); gray pixels are
// shaded luma in [0, 1] with a white background.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  float at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
};

struct Capsule {
  Vec3 a;
  Vec3 b;
  double radius = 0.0;
  double luma = 0.0;
};

struct Scene {
  std::vector<Capsule> capsules;
  bool ground_plane = false;
  double ground_z = 0.0;
  double ground_luma = 0.5;
};

struct RigParams {
  int count = 8;
  double radius = 4.0;
  double height = 1.5;
  Vec3 target{0.75, 0.0, 0.0};
  double fov_y = 1.3089969389957472;  // 75 degrees
  int width = 128;
  int height_px = 96;
  double near = 0.1;
  double far = 10.0;
};

// Cameras evenly spaced in azimuth on a circle about the chain root, all
// aimed at the same workspace target. Camera 0 sits on the +x azimuth.
std::vector<Camera> default_rig(const RigParams& params);

struct PixelHit {
  double row = 0.0;  // continuous; 0..height spans the image top to bottom
  double col = 0.0;  // continuous; 0..width spans left to right
  double depth = 0.0;
};

// Pinhole projection. Returns nullopt for points at or behind the camera
// plane rather than throwing.
std::optional<PixelHit> project(const Camera& cam, const Vec3& p);

// Smallest positive ray parameter at which o + t*d enters the capsule, or
// nullopt. d must be unit length for t to be metric.
std::optional<double> ray_capsule(const Vec3& o, const Vec3& d, const Capsule& cap);

Image render_depth(const Scene& scene, const Camera& cam);

Image render_gray(const Scene& scene, const Camera& cam, const Vec3& light_dir,
                  double ambient = 0.25);

// Luma of a palette color tag (Rec. 709 weights on the nominal RGB values).
double palette_luma(const std::string& color);

// Realizes a posed chain as one capsule per link.
Scene scene_from_chain(const chain::ChainConfig& config, const chain::LinkPoses& poses,
                       double link_radius, bool ground_plane);

} // namespace kin::render
