#include "splat/backward.hpp"

#include <cmath>

#include "splat/shading_detail.hpp"

namespace splat {

void GradientBundle::resize(size_t n) {
  position.resize(n);
  log_scale.resize(n);
  rotation.resize(n);
  opacity_logit.resize(n);
  sh_diffuse.resize(n);
  sh_specular.resize(n);
  specular_logit.resize(n);
  visibility.resize(n);
  local_light.resize(n);
  screen_grad_norm.resize(n);
  visible.resize(n);
  set_zero();
}

void GradientBundle::set_zero() {
  for (auto& v : position) v.setZero();
  for (auto& v : log_scale) v.setZero();
  for (auto& v : rotation) v.setZero();
  std::fill(opacity_logit.begin(), opacity_logit.end(), 0.0);
  for (auto& v : sh_diffuse) v.setZero();
  for (auto& v : sh_specular) v.setZero();
  std::fill(specular_logit.begin(), specular_logit.end(), 0.0);
  std::fill(visibility.begin(), visibility.end(), 0.0);
  for (auto& v : local_light) v.setZero();
  global_light.setZero();
  std::fill(screen_grad_norm.begin(), screen_grad_norm.end(), 0.0);
  std::fill(visible.begin(), visible.end(), uint8_t{0});
}

std::string GradientBundle::first_non_finite() const {
  auto bad3 = [](const Vec3& v) { return !v.allFinite(); };
  for (size_t i = 0; i < position.size(); ++i) {
    if (bad3(position[i])) return "position[" + std::to_string(i) + "]";
    if (bad3(log_scale[i])) return "log_scale[" + std::to_string(i) + "]";
    if (!rotation[i].allFinite()) return "rotation[" + std::to_string(i) + "]";
    if (!std::isfinite(opacity_logit[i])) return "opacity_logit[" + std::to_string(i) + "]";
    if (!sh_diffuse[i].allFinite()) return "sh_diffuse[" + std::to_string(i) + "]";
    if (!sh_specular[i].allFinite()) return "sh_specular[" + std::to_string(i) + "]";
    if (!std::isfinite(specular_logit[i])) return "specular_logit[" + std::to_string(i) + "]";
    if (!std::isfinite(visibility[i])) return "visibility[" + std::to_string(i) + "]";
    if (bad3(local_light[i])) return "local_light[" + std::to_string(i) + "]";
  }
  if (!global_light.allFinite()) return "global_light";
  return {};
}

namespace {

// Per-splat screen-space gradient slots accumulated by the rasterizer
// backward before being chained through projection and shading.
struct SplatGrad {
  Vec2 d_mean2d = Vec2::Zero();
  Mat2 d_cov2d = Mat2::Zero();
  Vec3 d_color = Vec3::Zero();
  double d_opacity = 0.0;
};

struct Contribution {
  int32_t entry;  // index into the tile list
  double alpha;
  double t_before;
};

// Walks one pixel exactly like composite_pixel, then distributes dL/dC over
// the contributing splats in reverse order.
void pixel_backward(const std::vector<Splat2D>& splats,
                    const std::vector<int32_t>& order, const Vec2& pixel,
                    const Vec3& background, const Vec3& d_pixel,
                    std::vector<Contribution>& scratch,
                    std::vector<SplatGrad>& tile_grads) {
  scratch.clear();
  double t = 1.0;
  for (int32_t entry = 0; entry < static_cast<int32_t>(order.size()); ++entry) {
    const Splat2D& s = splats[order[entry]];
    const double alpha = splat_alpha(s, pixel);
    if (alpha < kAlphaSkip) continue;
    scratch.push_back({entry, alpha, t});
    t *= 1.0 - alpha;
    if (t < kTransmittanceStop) break;
  }

  // Suffix accumulator: weighted colors composited behind splat i.
  Vec3 suffix = t * background;
  for (auto it = scratch.rbegin(); it != scratch.rend(); ++it) {
    const Splat2D& s = splats[order[it->entry]];
    SplatGrad& sg = tile_grads[it->entry];
    const double weight = it->t_before * it->alpha;

    sg.d_color += weight * d_pixel;

    const Vec3 d_color_d_alpha = it->t_before * s.color - suffix / (1.0 - it->alpha);
    const double d_alpha = d_pixel.dot(d_color_d_alpha);
    suffix += weight * s.color;

    // Through the clamp only when inactive.
    if (it->alpha >= kAlphaClamp) continue;
    const double kernel = it->alpha / s.opacity;  // exp(-maha2 / 2)
    sg.d_opacity += d_alpha * kernel;
    const double d_kernel = d_alpha * s.opacity;
    const double d_maha2 = -0.5 * kernel * d_kernel;

    const Vec2 d = pixel - s.mean2d;
    const Vec2 conic_d = s.conic * d;
    sg.d_mean2d += d_maha2 * -2.0 * conic_d;
    // d(maha2)/d(conic) = d d^T; conic = cov^-1 gives
    // d(maha2)/d(cov) = -(conic d)(conic d)^T.
    sg.d_cov2d -= d_maha2 * (conic_d * conic_d.transpose());
  }
}

}  // namespace

BackwardResult backward(const GaussianCloud& cloud, const Camera& cam,
                        const Image& gt, const ShadingConfig& cfg,
                        double lambda, const Vec3& background) {
  BackwardResult out;
  const size_t n = cloud.size();
  out.grads.resize(n);

  const std::vector<Splat2D> splats = prepare_splats(cam, cloud, cfg);
  const TileGrid grid = bin_tiles(splats, cam.width, cam.height);

  // Forward image (same traversal as render()).
  out.rendered = Image(cam.width, cam.height);
  const int n_tiles = grid.tiles_x * grid.tiles_y;
  parallel_for(n_tiles, [&](int64_t ti) {
    const int tx = int(ti % grid.tiles_x);
    const int ty = int(ti / grid.tiles_x);
    const auto& list = grid.lists[size_t(ti)];
    const int x1 = std::min((tx + 1) * kTileSize, cam.width);
    const int y1 = std::min((ty + 1) * kTileSize, cam.height);
    for (int y = ty * kTileSize; y < y1; ++y) {
      for (int x = tx * kTileSize; x < x1; ++x) {
        const PixelResult r =
            composite_pixel(splats, list, Vec2(x + 0.5, y + 0.5), background);
        out.rendered.set_rgb(x, y, r.color.cwiseMax(0.0).cwiseMin(1.0));
      }
    }
  });

  const LossGrad lg = loss_with_gradient(out.rendered, gt, lambda);
  out.loss = lg.value;

  // Rasterizer backward, one gradient buffer per tile. Buffers are merged
  // in tile order afterwards so results do not depend on the thread count.
  std::vector<std::vector<SplatGrad>> tile_buffers(n_tiles);
  parallel_for(n_tiles, [&](int64_t ti) {
    const int tx = int(ti % grid.tiles_x);
    const int ty = int(ti / grid.tiles_x);
    const auto& list = grid.lists[size_t(ti)];
    if (list.empty()) return;
    auto& buf = tile_buffers[size_t(ti)];
    buf.assign(list.size(), SplatGrad{});
    std::vector<Contribution> scratch;
    scratch.reserve(64);
    const int x1 = std::min((tx + 1) * kTileSize, cam.width);
    const int y1 = std::min((ty + 1) * kTileSize, cam.height);
    for (int y = ty * kTileSize; y < y1; ++y) {
      for (int x = tx * kTileSize; x < x1; ++x) {
        pixel_backward(splats, list, Vec2(x + 0.5, y + 0.5), background,
                       lg.grad.rgb(x, y), scratch, buf);
      }
    }
  });

  std::vector<SplatGrad> splat_grads(splats.size());
  for (int ti = 0; ti < n_tiles; ++ti) {
    const auto& list = grid.lists[size_t(ti)];
    const auto& buf = tile_buffers[size_t(ti)];
    for (size_t j = 0; j < buf.size(); ++j) {
      SplatGrad& dst = splat_grads[size_t(list[j])];
      dst.d_mean2d += buf[j].d_mean2d;
      dst.d_cov2d += buf[j].d_cov2d;
      dst.d_color += buf[j].d_color;
      dst.d_opacity += buf[j].d_opacity;
    }
  }

  // Chain through projection, covariance and shading per visible Gaussian.
  const Vec3 view_pos = cam.position();
  std::vector<Vec3> global_light_partials(splats.size(), Vec3::Zero());
  parallel_for(static_cast<int64_t>(splats.size()), [&](int64_t si) {
    const Splat2D& s = splats[size_t(si)];
    const SplatGrad& sg = splat_grads[size_t(si)];
    const int gi = s.source_index;
    const Gaussian3D& g = cloud.gaussians[size_t(gi)];

    out.grads.screen_grad_norm[size_t(gi)] = sg.d_mean2d.norm();
    out.grads.visible[size_t(gi)] = 1;

    // Opacity.
    const double o = g.opacity();
    out.grads.opacity_logit[size_t(gi)] = sg.d_opacity * o * (1.0 - o);

    // Shading.
    const ShadeGrads sh =
        shade_gaussian_backward(g, cloud.global_light, view_pos, cfg, sg.d_color);
    out.grads.sh_diffuse[size_t(gi)] = sh.d_sh_diffuse;
    out.grads.sh_specular[size_t(gi)] = sh.d_sh_specular;
    out.grads.specular_logit[size_t(gi)] = sh.d_specular_logit;
    out.grads.visibility[size_t(gi)] = sh.d_visibility;
    out.grads.local_light[size_t(gi)] = sh.d_local_light;
    global_light_partials[size_t(si)] = sh.d_global_light;

    // Projection: cov2d = A Sigma A^T + dilation, A = J R_w.
    const Vec3 p_cam = world_to_camera(cam, g.position);
    const double z = p_cam[2];
    const Mat23 jac = projection_jacobian(cam, p_cam);
    const Mat23 a = jac * cam.rotation;
    const Mat3 cov3d = build_covariance(g.log_scale, g.rotation);

    const Mat3 d_sigma = a.transpose() * sg.d_cov2d * a;
    const Mat23 d_a = 2.0 * sg.d_cov2d * a * cov3d;
    const Mat23 d_jac = d_a * cam.rotation.transpose();

    Vec3 d_p_cam = jac.transpose() * sg.d_mean2d;
    const double inv_z2 = 1.0 / (z * z);
    const double inv_z3 = inv_z2 / z;
    d_p_cam[0] += d_jac(0, 2) * (-cam.fx * inv_z2);
    d_p_cam[1] += d_jac(1, 2) * (-cam.fy * inv_z2);
    d_p_cam[2] += d_jac(0, 0) * (-cam.fx * inv_z2) +
                  d_jac(0, 2) * (2.0 * cam.fx * p_cam[0] * inv_z3) +
                  d_jac(1, 1) * (-cam.fy * inv_z2) +
                  d_jac(1, 2) * (2.0 * cam.fy * p_cam[1] * inv_z3);

    out.grads.position[size_t(gi)] =
        sh.d_position + cam.rotation.transpose() * d_p_cam;

    // Sigma = M M^T with M = R diag(s).
    const Mat3 rot = rotation_matrix(g.rotation);
    const Vec3 scales = g.scales();
    const Mat3 m = rot * scales.asDiagonal();
    const Mat3 d_m = 2.0 * d_sigma * m;
    const Mat3 d_s_full = rot.transpose() * d_m;
    Vec3 d_log_scale;
    for (int k = 0; k < 3; ++k) {
      // Scale floor: below it the path is clamped.
      const double ds = std::exp(g.log_scale[k]) > kScaleFloor ? d_s_full(k, k) : 0.0;
      d_log_scale[k] = ds * scales[k];
    }
    out.grads.log_scale[size_t(gi)] = d_log_scale;

    const Mat3 d_rot_cov = d_m * scales.asDiagonal();
    const auto dr = rotation_matrix_jacobian(g.rotation);
    Vec4 d_q = sh.d_rotation;
    for (int k = 0; k < 4; ++k) {
      d_q[k] += (dr[k].array() * d_rot_cov.array()).sum();
    }
    out.grads.rotation[size_t(gi)] = d_q;
  });

  for (const Vec3& p : global_light_partials) out.grads.global_light += p;
  return out;
}

double get_param(const GaussianCloud& cloud, const ParamRef& ref) {
  if (ref.field == ParamField::kGlobalLight) return cloud.global_light[ref.component];
  const Gaussian3D& g = cloud.gaussians[size_t(ref.gaussian)];
  switch (ref.field) {
    case ParamField::kPosition: return g.position[ref.component];
    case ParamField::kLogScale: return g.log_scale[ref.component];
    case ParamField::kRotation: return g.rotation[ref.component];
    case ParamField::kOpacityLogit: return g.opacity_logit;
    case ParamField::kShDiffuse: return g.sh_diffuse(ref.component / 3, ref.component % 3);
    case ParamField::kShSpecular: return g.sh_specular(ref.component / 3, ref.component % 3);
    case ParamField::kSpecularLogit: return g.specular_logit;
    case ParamField::kVisibility: return g.visibility;
    case ParamField::kLocalLight: return g.local_light[ref.component];
    default: return 0.0;
  }
}

void set_param(GaussianCloud& cloud, const ParamRef& ref, double value) {
  if (ref.field == ParamField::kGlobalLight) {
    cloud.global_light[ref.component] = value;
    return;
  }
  Gaussian3D& g = cloud.gaussians[size_t(ref.gaussian)];
  switch (ref.field) {
    case ParamField::kPosition: g.position[ref.component] = value; break;
    case ParamField::kLogScale: g.log_scale[ref.component] = value; break;
    case ParamField::kRotation: g.rotation[ref.component] = value; break;
    case ParamField::kOpacityLogit: g.opacity_logit = value; break;
    case ParamField::kShDiffuse: g.sh_diffuse(ref.component / 3, ref.component % 3) = value; break;
    case ParamField::kShSpecular: g.sh_specular(ref.component / 3, ref.component % 3) = value; break;
    case ParamField::kSpecularLogit: g.specular_logit = value; break;
    case ParamField::kVisibility: g.visibility = value; break;
    case ParamField::kLocalLight: g.local_light[ref.component] = value; break;
    case ParamField::kGlobalLight: break;
  }
}

double bundle_value(const GradientBundle& grads, const ParamRef& ref) {
  if (ref.field == ParamField::kGlobalLight) return grads.global_light[ref.component];
  const size_t i = size_t(ref.gaussian);
  switch (ref.field) {
    case ParamField::kPosition: return grads.position[i][ref.component];
    case ParamField::kLogScale: return grads.log_scale[i][ref.component];
    case ParamField::kRotation: return grads.rotation[i][ref.component];
    case ParamField::kOpacityLogit: return grads.opacity_logit[i];
    case ParamField::kShDiffuse: return grads.sh_diffuse[i](ref.component / 3, ref.component % 3);
    case ParamField::kShSpecular: return grads.sh_specular[i](ref.component / 3, ref.component % 3);
    case ParamField::kSpecularLogit: return grads.specular_logit[i];
    case ParamField::kVisibility: return grads.visibility[i];
    case ParamField::kLocalLight: return grads.local_light[i][ref.component];
    default: return 0.0;
  }
}

std::string param_name(const ParamRef& ref) {
  const char* field = "";
  switch (ref.field) {
    case ParamField::kPosition: field = "position"; break;
    case ParamField::kLogScale: field = "log_scale"; break;
    case ParamField::kRotation: field = "rotation"; break;
    case ParamField::kOpacityLogit: field = "opacity_logit"; break;
    case ParamField::kShDiffuse: field = "sh_diffuse"; break;
    case ParamField::kShSpecular: field = "sh_specular"; break;
    case ParamField::kSpecularLogit: field = "specular_logit"; break;
    case ParamField::kVisibility: field = "visibility"; break;
    case ParamField::kLocalLight: field = "local_light"; break;
    case ParamField::kGlobalLight: field = "global_light"; break;
  }
  return std::string(field) + "[" + std::to_string(ref.gaussian) + "][" +
         std::to_string(ref.component) + "]";
}

std::vector<ParamRef> enumerate_params(const GaussianCloud& cloud) {
  std::vector<ParamRef> refs;
  const int n = static_cast<int>(cloud.size());
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) refs.push_back({ParamField::kPosition, i, c});
    for (int c = 0; c < 3; ++c) refs.push_back({ParamField::kLogScale, i, c});
    for (int c = 0; c < 4; ++c) refs.push_back({ParamField::kRotation, i, c});
    refs.push_back({ParamField::kOpacityLogit, i, 0});
    for (int c = 0; c < kShCoeffCount * 3; ++c) refs.push_back({ParamField::kShDiffuse, i, c});
    for (int c = 0; c < kShCoeffCount * 3; ++c) refs.push_back({ParamField::kShSpecular, i, c});
    refs.push_back({ParamField::kSpecularLogit, i, 0});
    refs.push_back({ParamField::kVisibility, i, 0});
    for (int c = 0; c < 3; ++c) refs.push_back({ParamField::kLocalLight, i, c});
  }
  for (int c = 0; c < 3; ++c) refs.push_back({ParamField::kGlobalLight, -1, c});
  return refs;
}

double fd_gradient(const GaussianCloud& cloud, const Camera& cam,
                   const Image& gt, const ShadingConfig& cfg, double lambda,
                   const Vec3& background, const ParamRef& ref, double h) {
  GaussianCloud work = cloud;
  const double base = get_param(work, ref);
  set_param(work, ref, base + h);
  const double hi = loss(render(cam, work, cfg, background), gt, lambda);
  set_param(work, ref, base - h);
  const double lo = loss(render(cam, work, cfg, background), gt, lambda);
  set_param(work, ref, base);
  return (hi - lo) / (2.0 * h);
}

}  // namespace splat
