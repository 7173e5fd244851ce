#include "splat/gaussian.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace splat {

Mat3 rotation_matrix(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

std::array<Mat3, 4> rotation_matrix_jacobian(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Mat3, 4> d;
  d[0] << 0, -z, y,
          z, 0, -x,
          -y, x, 0;
  d[1] << 0, y, z,
          y, -2 * x, -w,
          z, w, -2 * x;
  d[2] << -2 * y, x, w,
          x, 0, z,
          -w, z, -2 * y;
  d[3] << -2 * z, -w, x,
          w, -2 * z, y,
          x, y, 0;
  for (auto& m : d) m *= 2.0;
  return d;
}

Mat3 build_covariance(const Vec3& log_scale, const Vec4& rotation) {
  const Mat3 r = rotation_matrix(rotation);
  const Vec3 s = log_scale.array().exp().max(kScaleFloor).matrix();
  const Mat3 m = r * s.asDiagonal();
  return m * m.transpose();
}

double gaussian_density(const Gaussian3D& g, const Vec3& x) {
  const Mat3 cov = build_covariance(g.log_scale, g.rotation);
  Eigen::LDLT<Mat3> solver(cov);
  if (solver.info() != Eigen::Success || !solver.isPositive()) {
    throw std::runtime_error("gaussian_density: degenerate covariance");
  }
  const Vec3 d = x - g.position;
  const double maha2 = d.dot(solver.solve(d));
  return std::exp(-0.5 * maha2);
}

int smallest_scale_axis(const Vec3& scales) {
  double best = scales.minCoeff();
  for (int k = 0; k < 3; ++k) {
    if (scales[k] <= best + 1e-9) return k;
  }
  return 0;
}

Vec3 estimate_normal(const Gaussian3D& g, const Vec3& view_pos) {
  const int axis = smallest_scale_axis(g.scales());
  Vec3 n = rotation_matrix(g.rotation).col(axis);
  n.normalize();
  if (n.dot(view_pos - g.position) < 0.0) n = -n;
  return n;
}

}  // namespace splat
