#include "splat/camera.hpp"

#include <stdexcept>

namespace splat {

void Camera::validate() const {
  if ((rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw std::invalid_argument("Camera: rotation is not orthonormal");
  }
  if (!(near > 0.0) || !(far > near)) {
    throw std::invalid_argument("Camera: need 0 < near < far");
  }
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("Camera: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("Camera: resolution must be positive");
  }
}

void Splat2D::finalize() {
  const double det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
  conic << cov2d(1, 1), -cov2d(0, 1), -cov2d(1, 0), cov2d(0, 0);
  conic /= det;
  const double mid = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
  const double lam_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
  radius = 3.0 * std::sqrt(lam_max);
}

Vec3 world_to_camera(const Camera& cam, const Vec3& p) {
  return cam.rotation * p + cam.translation;
}

Mat23 projection_jacobian(const Camera& cam, const Vec3& p_cam) {
  const double x = p_cam[0], y = p_cam[1], z = p_cam[2];
  const double inv_z = 1.0 / z;
  const double inv_z2 = inv_z * inv_z;
  Mat23 j;
  j << cam.fx * inv_z, 0.0, -cam.fx * x * inv_z2,
      0.0, cam.fy * inv_z, -cam.fy * y * inv_z2;
  return j;
}

std::optional<Splat2D> project_gaussian(const Camera& cam, const Gaussian3D& g,
                                        const Vec3& shaded_color) {
  const Vec3 p_cam = world_to_camera(cam, g.position);
  const double z = p_cam[2];
  if (!(z > cam.near) || !(z < cam.far)) return std::nullopt;

  Splat2D s;
  s.mean2d = Vec2(cam.fx * p_cam[0] / z + cam.cx, cam.fy * p_cam[1] / z + cam.cy);
  s.depth = z;

  const Vec2 center(0.5 * cam.width, 0.5 * cam.height);
  const double half_diag = 0.5 * std::hypot(double(cam.width), double(cam.height));
  if ((s.mean2d - center).norm() > kCullGuardBand * half_diag) return std::nullopt;

  const Mat23 a = projection_jacobian(cam, p_cam) * cam.rotation;
  const Mat3 cov3d = build_covariance(g.log_scale, g.rotation);
  s.cov2d = a * cov3d * a.transpose();
  s.cov2d(0, 0) += kCovDilation;
  s.cov2d(1, 1) += kCovDilation;
  s.color = shaded_color;
  s.opacity = g.opacity();
  s.source_index = -1;
  s.finalize();
  return s;
}

std::vector<int32_t> frustum_cull(const Camera& cam, const GaussianCloud& cloud) {
  std::vector<int32_t> visible;
  visible.reserve(cloud.size());
  for (int32_t i = 0; i < static_cast<int32_t>(cloud.size()); ++i) {
    if (project_gaussian(cam, cloud.gaussians[i], Vec3::Zero())) {
      visible.push_back(i);
    }
  }
  return visible;
}

}  // namespace splat
