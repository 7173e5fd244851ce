#pragma once

#include <optional>

#include "splat/gaussian.hpp"

namespace splat {

// Ablation switches for the color synthesis path.
enum class ShadingMode { kFull, kDiffuseOnly, kSpecularOnly, kBaselineSh };

struct ShadingConfig {
  ShadingMode mode = ShadingMode::kFull;
  // Direction toward the light, unit length. When unset the view direction
  // stands in for the cosine term, which keeps the model trainable from
  // posed images alone.
  std::optional<Vec3> light_direction;
};

// Simplified incident light: V * L_global + L_local, componentwise.
Vec3 incident_light(double visibility, const Vec3& global_light,
                    const Vec3& local_light);

// Diffuse/specular blend: (1-a) * shc_d * cos_theta + a * shc_s.
Vec3 compose_color(const Vec3& shc_d, const Vec3& shc_s, double a,
                   double cos_theta);

// Closed-form d(compose_color)/da; shared with the backward pass.
Vec3 compose_color_grad_a(const Vec3& shc_d, const Vec3& shc_s,
                          double cos_theta);

// Mirror reflection d - 2(d.n)n for unit d, n.
Vec3 reflect(const Vec3& d, const Vec3& n);

// Full per-Gaussian color: SH radiance blended per mode, modulated by the
// incident light, clamped to [0,1].
Vec3 shade_gaussian(const Gaussian3D& g, const Vec3& global_light,
                    const Vec3& view_pos, const ShadingConfig& cfg);

}  // namespace splat
