#pragma once

#include <array>

#include "splat/core.hpp"

namespace splat {

// Real spherical-harmonic basis through degree 3 with the hard-coded
// constants used by 3DGS-style renderers. Index layout: degree 0 at 0,
// degree 1 at 1..3, degree 2 at 4..8, degree 3 at 9..15.
std::array<double, kShCoeffCount> sh_basis(const Vec3& unit_dir);

// Partial derivatives of each basis function w.r.t. the direction
// components (rows: basis index, cols: d/dx d/dy d/dz).
Eigen::Matrix<double, kShCoeffCount, 3> sh_basis_jacobian(const Vec3& unit_dir);

// Per-channel sum of coeffs * basis. Throws std::invalid_argument when the
// direction is not unit length within 1e-6. Output is unclamped.
Vec3 eval_sh(const ShCoeffs& coeffs, const Vec3& dir);

// Hot-path variant: assumes dir is already unit.
Vec3 eval_sh_unit(const ShCoeffs& coeffs, const Vec3& unit_dir);

}  // namespace splat
