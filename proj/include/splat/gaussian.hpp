#pragma once

#include <array>
#include <vector>

#include "splat/core.hpp"

namespace splat {

// One anisotropic Gaussian primitive. Scales are stored in log-space and
// opacity / specular weight as logits so plain gradient steps cannot leave
// the valid ranges. Rotation is a quaternion (w, x, y, z), kept unit-norm
// by the optimizer.
struct Gaussian3D {
  Vec3 position = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 rotation = Vec4(1, 0, 0, 0);
  double opacity_logit = 0.0;
  ShCoeffs sh_diffuse = ShCoeffs::Zero();
  ShCoeffs sh_specular = ShCoeffs::Zero();
  double specular_logit = 0.0;
  double visibility = 1.0;
  Vec3 local_light = Vec3::Zero();

  // Extreme logits would round the sigmoid onto the closed bounds; clamp
  // to the nearest representable values inside (0,1).
  double opacity() const { return open_unit(sigmoid(opacity_logit)); }
  double specular_weight() const { return open_unit(sigmoid(specular_logit)); }
  // Per-axis standard deviations, floored to keep the covariance invertible.
  Vec3 scales() const {
    return log_scale.array().exp().max(kScaleFloor).matrix();
  }
};

struct GaussianCloud {
  std::vector<Gaussian3D> gaussians;
  Vec3 global_light = Vec3::Ones();
  Aabb bbox;

  size_t size() const { return gaussians.size(); }
  void update_bbox() {
    bbox = Aabb{};
    for (const auto& g : gaussians) bbox.expand(g.position);
  }
};

// Rotation matrix of a quaternion (w, x, y, z) via the standard quadratic
// form. Exact for unit quaternions; gradients treat the entries as plain
// quadratics in q (see rotation_matrix_jacobian).
Mat3 rotation_matrix(const Vec4& q);

// d(rotation_matrix)/dq_k for k = 0..3.
std::array<Mat3, 4> rotation_matrix_jacobian(const Vec4& q);

// Sigma = R * diag(s^2) * R^T with s = exp(log_scale) floored.
Mat3 build_covariance(const Vec3& log_scale, const Vec4& rotation);

// exp(-1/2 (x-mu)^T Sigma^-1 (x-mu)), in (0, 1]. Throws on a singular
// covariance (cannot happen for scales above the floor).
double gaussian_density(const Gaussian3D& g, const Vec3& x);

// Shortest-axis normal, flipped toward the viewer. Ties between scale axes
// within 1e-9 resolve to the lower axis index.
Vec3 estimate_normal(const Gaussian3D& g, const Vec3& view_pos);

// Axis index used by estimate_normal (exposed for the backward pass).
int smallest_scale_axis(const Vec3& scales);

}  // namespace splat
