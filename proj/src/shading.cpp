#include "splat/shading.hpp"

#include <algorithm>

#include "splat/sh.hpp"
#include "splat/shading_detail.hpp"

namespace splat {

Vec3 incident_light(double visibility, const Vec3& global_light,
                    const Vec3& local_light) {
  return visibility * global_light + local_light;
}

Vec3 compose_color(const Vec3& shc_d, const Vec3& shc_s, double a,
                   double cos_theta) {
  return (1.0 - a) * cos_theta * shc_d + a * shc_s;
}

Vec3 compose_color_grad_a(const Vec3& shc_d, const Vec3& shc_s,
                          double cos_theta) {
  return shc_s - cos_theta * shc_d;
}

Vec3 reflect(const Vec3& d, const Vec3& n) { return d - 2.0 * d.dot(n) * n; }

ShadeEval eval_shading(const Gaussian3D& g, const Vec3& global_light,
                       const Vec3& view_pos, const ShadingConfig& cfg) {
  ShadeEval e;
  const Vec3 rel = view_pos - g.position;
  e.dist = rel.norm();
  e.omega_o = rel / e.dist;

  e.axis = smallest_scale_axis(g.scales());
  const Vec3 col = rotation_matrix(g.rotation).col(e.axis);
  e.col_norm = col.norm();
  Vec3 n0 = col / e.col_norm;
  e.n_sign = n0.dot(rel) < 0.0 ? -1.0 : 1.0;
  e.n = e.n_sign * n0;

  e.light_is_view = !cfg.light_direction.has_value();
  e.dir_light = e.light_is_view ? e.omega_o : *cfg.light_direction;
  e.cos_raw = e.dir_light.dot(e.n);
  e.cos_theta = std::clamp(e.cos_raw, 0.0, 1.0);

  e.basis_d = sh_basis(e.omega_o);
  e.omega_r = reflect(-e.omega_o, e.n);
  e.basis_s = sh_basis(e.omega_r);
  for (int c = 0; c < 3; ++c) {
    double d = 0.0, s = 0.0;
    for (int i = 0; i < kShCoeffCount; ++i) {
      d += e.basis_d[i] * g.sh_diffuse(i, c);
      s += e.basis_s[i] * g.sh_specular(i, c);
    }
    e.shc_d[c] = d + 0.5;
    e.shc_s[c] = s + 0.5;
  }

  e.a = g.specular_weight();
  switch (cfg.mode) {
    case ShadingMode::kFull:
      e.c0 = compose_color(e.shc_d, e.shc_s, e.a, e.cos_theta);
      break;
    case ShadingMode::kDiffuseOnly:
      e.c0 = e.cos_theta * e.shc_d;
      break;
    case ShadingMode::kSpecularOnly:
      e.c0 = e.shc_s;
      break;
    case ShadingMode::kBaselineSh:
      e.c0 = e.shc_d;
      break;
  }

  e.light = incident_light(g.visibility, global_light, g.local_light);
  e.pre_clamp = (e.c0.array() * e.light.array()).matrix();
  e.color = e.pre_clamp.cwiseMax(0.0).cwiseMin(1.0);
  return e;
}

Vec3 shade_gaussian(const Gaussian3D& g, const Vec3& global_light,
                    const Vec3& view_pos, const ShadingConfig& cfg) {
  return eval_shading(g, global_light, view_pos, cfg).color;
}

ShadeGrads shade_gaussian_backward(const Gaussian3D& g, const Vec3& global_light,
                                   const Vec3& view_pos, const ShadingConfig& cfg,
                                   const Vec3& d_color) {
  const ShadeEval e = eval_shading(g, global_light, view_pos, cfg);
  ShadeGrads out;

  // Clamp subgradient: channels stuck at the [0,1] boundary pass nothing.
  Vec3 d_pre = Vec3::Zero();
  for (int c = 0; c < 3; ++c) {
    if (e.pre_clamp[c] > 0.0 && e.pre_clamp[c] < 1.0) d_pre[c] = d_color[c];
  }

  const Vec3 d_c0 = (d_pre.array() * e.light.array()).matrix();
  const Vec3 d_light = (d_pre.array() * e.c0.array()).matrix();
  out.d_visibility = d_light.dot(global_light);
  out.d_global_light = g.visibility * d_light;
  out.d_local_light = d_light;

  Vec3 d_shc_d = Vec3::Zero(), d_shc_s = Vec3::Zero();
  double d_a = 0.0, d_cos = 0.0;
  switch (cfg.mode) {
    case ShadingMode::kFull:
      d_a = d_c0.dot(compose_color_grad_a(e.shc_d, e.shc_s, e.cos_theta));
      d_shc_d = (1.0 - e.a) * e.cos_theta * d_c0;
      d_shc_s = e.a * d_c0;
      d_cos = (1.0 - e.a) * d_c0.dot(e.shc_d);
      break;
    case ShadingMode::kDiffuseOnly:
      d_shc_d = e.cos_theta * d_c0;
      d_cos = d_c0.dot(e.shc_d);
      break;
    case ShadingMode::kSpecularOnly:
      d_shc_s = d_c0;
      break;
    case ShadingMode::kBaselineSh:
      d_shc_d = d_c0;
      break;
  }
  out.d_specular_logit = d_a * e.a * (1.0 - e.a);

  // SH coefficients: out(c) = sum_i basis[i] * coeff(i, c).
  for (int i = 0; i < kShCoeffCount; ++i) {
    out.d_sh_diffuse.row(i) = e.basis_d[i] * d_shc_d.transpose();
    out.d_sh_specular.row(i) = e.basis_s[i] * d_shc_s.transpose();
  }

  // Directions entering through the SH bases.
  const auto jac_d = sh_basis_jacobian(e.omega_o);
  const auto jac_s = sh_basis_jacobian(e.omega_r);
  Eigen::Matrix<double, kShCoeffCount, 1> row_dot_d = g.sh_diffuse * d_shc_d;
  Eigen::Matrix<double, kShCoeffCount, 1> row_dot_s = g.sh_specular * d_shc_s;
  Vec3 d_omega_o = jac_d.transpose() * row_dot_d;
  const Vec3 d_omega_r = jac_s.transpose() * row_dot_s;

  // omega_r = 2 (omega_o . n) n - omega_o
  const double on = e.omega_o.dot(e.n);
  Vec3 d_n = 2.0 * (on * d_omega_r + e.omega_o * e.n.dot(d_omega_r));
  d_omega_o += 2.0 * e.n * e.n.dot(d_omega_r) - d_omega_r;

  // Cosine clamp passes gradient strictly inside (0, 1) only.
  if (e.cos_raw > 0.0 && e.cos_raw < 1.0) {
    if (e.light_is_view) {
      d_omega_o += d_cos * e.n;
      d_n += d_cos * e.omega_o;
    } else {
      d_n += d_cos * e.dir_light;
    }
  }

  // n = sign * normalize(R.col(axis)); axis choice and sign are discrete.
  const Vec3 n0 = e.n_sign * e.n;  // unsigned unit column
  const Vec3 d_col =
      (e.n_sign / e.col_norm) * (d_n - n0 * n0.dot(d_n));
  const auto dr = rotation_matrix_jacobian(g.rotation);
  for (int k = 0; k < 4; ++k) {
    out.d_rotation[k] += dr[k].col(e.axis).dot(d_col);
  }

  // omega_o = (view_pos - position) / dist
  const Vec3 d_rel = (d_omega_o - e.omega_o * e.omega_o.dot(d_omega_o)) / e.dist;
  out.d_position = -d_rel;
  return out;
}

}  // namespace splat
