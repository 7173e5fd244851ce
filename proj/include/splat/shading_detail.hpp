#pragma once

#include <array>

#include "splat/shading.hpp"

namespace splat {

// Every intermediate of shade_gaussian, shared between the forward path and
// the analytic backward pass so the two cannot drift apart.
struct ShadeEval {
  Vec3 omega_o = Vec3::Zero();
  double dist = 0.0;             // |view_pos - position|
  int axis = 0;                  // shortest-scale axis index
  double col_norm = 1.0;         // |R.col(axis)| (1 for unit quaternions)
  double n_sign = 1.0;           // viewer-facing flip
  Vec3 n = Vec3::Zero();
  Vec3 omega_r = Vec3::Zero();
  std::array<double, kShCoeffCount> basis_d{}, basis_s{};
  Vec3 shc_d = Vec3::Zero(), shc_s = Vec3::Zero();
  Vec3 dir_light = Vec3::Zero();
  bool light_is_view = true;
  double cos_raw = 0.0, cos_theta = 0.0;
  double a = 0.0;
  Vec3 c0 = Vec3::Zero();
  Vec3 light = Vec3::Zero();
  Vec3 pre_clamp = Vec3::Zero();
  Vec3 color = Vec3::Zero();
};

ShadeEval eval_shading(const Gaussian3D& g, const Vec3& global_light,
                       const Vec3& view_pos, const ShadingConfig& cfg);

// Gradients of the loss w.r.t. one Gaussian's shading inputs given
// dL/d(shaded color).
struct ShadeGrads {
  Vec3 d_position = Vec3::Zero();
  Vec4 d_rotation = Vec4::Zero();
  ShCoeffs d_sh_diffuse = ShCoeffs::Zero();
  ShCoeffs d_sh_specular = ShCoeffs::Zero();
  double d_specular_logit = 0.0;
  double d_visibility = 0.0;
  Vec3 d_local_light = Vec3::Zero();
  Vec3 d_global_light = Vec3::Zero();
};

ShadeGrads shade_gaussian_backward(const Gaussian3D& g, const Vec3& global_light,
                                   const Vec3& view_pos, const ShadingConfig& cfg,
                                   const Vec3& d_color);

}  // namespace splat
