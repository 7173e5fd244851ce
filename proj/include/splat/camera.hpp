#pragma once

#include <optional>
#include <vector>

#include "splat/gaussian.hpp"

namespace splat {

// Pinhole camera. Pixel coordinates run x right, y down, z forward; the
// pixel (i, j) covers [i, i+1) x [j, j+1) with its center at (i+.5, j+.5).
struct Camera {
  Mat3 rotation = Mat3::Identity();   // world-to-camera
  Vec3 translation = Vec3::Zero();
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  double near = 0.01, far = 1000.0;

  Vec3 position() const { return -rotation.transpose() * translation; }
  void validate() const;  // throws on a non-orthonormal rotation etc.
};

// A projected Gaussian. conic and radius are derived caches (inverse of
// cov2d and the 3-sigma support half-extent) so per-pixel work stays cheap.
struct Splat2D {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  int32_t source_index = -1;
  Mat2 conic = Mat2::Identity();
  double radius = 0.0;

  void finalize();  // fills conic and radius from cov2d
};

Vec3 world_to_camera(const Camera& cam, const Vec3& p);

// d(pixel)/d(p_cam) of the pinhole map at p_cam; requires p_cam.z >= near.
Mat23 projection_jacobian(const Camera& cam, const Vec3& p_cam);

// EWA projection: Sigma' = J W Sigma W^T J^T plus the low-pass dilation.
// Returns nullopt when the Gaussian is culled (depth outside (near, far) or
// the projected mean farther than 1.3x the image half-diagonal from the
// image center).
std::optional<Splat2D> project_gaussian(const Camera& cam, const Gaussian3D& g,
                                        const Vec3& shaded_color);

// Indices of Gaussians surviving project_gaussian, in cloud order.
std::vector<int32_t> frustum_cull(const Camera& cam, const GaussianCloud& cloud);

}  // namespace splat
