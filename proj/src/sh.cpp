#include "splat/sh.hpp"

#include <cmath>
#include <stdexcept>

namespace splat {

namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.48860251190291987;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792,
                           0.31539156525252005, -1.0925484305920792,
                           0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554,
                           -0.4570457994644658, 0.3731763325901154,
                           -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};

}  // namespace

std::array<double, kShCoeffCount> sh_basis(const Vec3& d) {
  const double x = d[0], y = d[1], z = d[2];
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, yz = y * z, xz = x * z;
  return {
      kC0,
      -kC1 * y,
      kC1 * z,
      -kC1 * x,
      kC2[0] * xy,
      kC2[1] * yz,
      kC2[2] * (2.0 * zz - xx - yy),
      kC2[3] * xz,
      kC2[4] * (xx - yy),
      kC3[0] * y * (3.0 * xx - yy),
      kC3[1] * xy * z,
      kC3[2] * y * (4.0 * zz - xx - yy),
      kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
      kC3[4] * x * (4.0 * zz - xx - yy),
      kC3[5] * z * (xx - yy),
      kC3[6] * x * (xx - 3.0 * yy),
  };
}

Eigen::Matrix<double, kShCoeffCount, 3> sh_basis_jacobian(const Vec3& d) {
  const double x = d[0], y = d[1], z = d[2];
  const double xx = x * x, yy = y * y, zz = z * z;
  Eigen::Matrix<double, kShCoeffCount, 3> j;
  j.setZero();
  // degree 1
  j(1, 1) = -kC1;
  j(2, 2) = kC1;
  j(3, 0) = -kC1;
  // degree 2
  j.row(4) << kC2[0] * y, kC2[0] * x, 0;
  j.row(5) << 0, kC2[1] * z, kC2[1] * y;
  j.row(6) << -2.0 * kC2[2] * x, -2.0 * kC2[2] * y, 4.0 * kC2[2] * z;
  j.row(7) << kC2[3] * z, 0, kC2[3] * x;
  j.row(8) << 2.0 * kC2[4] * x, -2.0 * kC2[4] * y, 0;
  // degree 3
  j.row(9) << kC3[0] * 6.0 * x * y, kC3[0] * (3.0 * xx - 3.0 * yy), 0;
  j.row(10) << kC3[1] * y * z, kC3[1] * x * z, kC3[1] * x * y;
  j.row(11) << kC3[2] * (-2.0 * x * y), kC3[2] * (4.0 * zz - xx - 3.0 * yy),
      kC3[2] * 8.0 * y * z;
  j.row(12) << kC3[3] * (-6.0 * x * z), kC3[3] * (-6.0 * y * z),
      kC3[3] * (6.0 * zz - 3.0 * xx - 3.0 * yy);
  j.row(13) << kC3[4] * (4.0 * zz - 3.0 * xx - yy), kC3[4] * (-2.0 * x * y),
      kC3[4] * 8.0 * x * z;
  j.row(14) << kC3[5] * 2.0 * x * z, kC3[5] * (-2.0 * y * z),
      kC3[5] * (xx - yy);
  j.row(15) << kC3[6] * (3.0 * xx - 3.0 * yy), kC3[6] * (-6.0 * x * y), 0;
  return j;
}

Vec3 eval_sh_unit(const ShCoeffs& coeffs, const Vec3& d) {
  const auto basis = sh_basis(d);
  Vec3 out = Vec3::Zero();
  for (int i = 0; i < kShCoeffCount; ++i) {
    out += basis[i] * coeffs.row(i).transpose();
  }
  return out;
}

Vec3 eval_sh(const ShCoeffs& coeffs, const Vec3& dir) {
  if (std::abs(dir.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("eval_sh: direction must be unit length");
  }
  return eval_sh_unit(coeffs, dir);
}

}  // namespace splat
