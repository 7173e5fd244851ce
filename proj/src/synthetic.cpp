#include "splat/synthetic.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>

namespace splat {

Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up,
                      int width, int height, double focal) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 side = forward.cross(up).normalized();
  const Vec3 down = forward.cross(side);
  Camera cam;
  cam.rotation.row(0) = side;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = forward;
  cam.translation = -cam.rotation * eye;
  cam.fx = cam.fy = focal;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.width = width;
  cam.height = height;
  cam.near = 0.01;
  cam.far = 100.0;
  return cam;
}

namespace {

constexpr double kTau = 6.283185307179586;

// Quaternion rotating +z onto dir (unit).
Vec4 quat_z_to(const Vec3& dir) {
  const Vec3 z(0, 0, 1);
  const double c = z.dot(dir);
  if (c > 1.0 - 1e-12) return Vec4(1, 0, 0, 0);
  if (c < -1.0 + 1e-12) return Vec4(0, 1, 0, 0);  // 180 deg about x
  const Vec3 axis = z.cross(dir).normalized();
  const double half = 0.5 * std::acos(std::clamp(c, -1.0, 1.0));
  const double s = std::sin(half);
  return Vec4(std::cos(half), axis[0] * s, axis[1] * s, axis[2] * s);
}

void set_albedo(Gaussian3D& g, const Vec3& color) {
  constexpr double c0 = 0.28209479177387814;
  for (int c = 0; c < 3; ++c) g.sh_diffuse(0, c) = (color[c] - 0.5) / c0;
}

// Degree-1 specular lobe peaked along dir with amplitude kappa per channel.
void set_specular_lobe(Gaussian3D& g, const Vec3& dir, const Vec3& kappa) {
  constexpr double c1 = 0.48860251190291987;
  const double b[3] = {-c1 * dir[1], c1 * dir[2], -c1 * dir[0]};
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) g.sh_specular(1 + i, c) = kappa[c] * b[i];
  }
}

std::vector<TrainView> ring_views(const GaussianCloud& generator,
                                  const ShadingConfig& shading,
                                  const Vec3& background, int n_views, int width,
                                  int height, double ring_radius, double base_height,
                                  double focal, bool alternate_height) {
  std::vector<TrainView> views;
  views.reserve(size_t(n_views));
  // focal is given for a 64px image; keep the field of view fixed across
  // resolutions.
  const double focal_px = focal * width / 64.0;
  for (int v = 0; v < n_views; ++v) {
    const double phi = kTau * double(v) / double(n_views);
    const double h = alternate_height ? base_height * (v % 2 == 0 ? 1.0 : 0.6)
                                      : base_height;
    const Vec3 eye(ring_radius * std::cos(phi), ring_radius * std::sin(phi), h);
    TrainView view;
    view.camera =
        look_at_camera(eye, Vec3::Zero(), Vec3(0, 0, 1), width, height, focal_px);
    view.gt = render_reference(view.camera, generator, shading, background);
    views.push_back(std::move(view));
  }
  return views;
}

SyntheticScene make_shell(uint64_t seed, int width, int height, int n_views) {
  SyntheticScene scene;
  Rng rng(seed);
  const int n = 400;
  const double radius = 1.0;

  // Fibonacci sphere with a deterministic jitter for even shell coverage.
  const double golden = kTau * (1.0 - 1.0 / 1.618033988749895);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / double(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i + 0.02 * rng.normal();
    const Vec3 dir(r * std::cos(phi), r * std::sin(phi), z);
    Gaussian3D g;
    g.position = radius * dir;
    g.rotation = quat_z_to(dir);  // shortest axis radial
    g.log_scale = Vec3(std::log(0.09), std::log(0.09), std::log(0.03));
    g.opacity_logit = logit(0.9);
    g.specular_logit = logit(0.1);
    set_albedo(g, Vec3(0.35 + 0.3 * rng.uniform(), 0.35 + 0.3 * rng.uniform(),
                       0.35 + 0.3 * rng.uniform()));
    scene.generator.gaussians.push_back(g);
  }
  scene.generator.update_bbox();

  scene.shading.mode = ShadingMode::kFull;
  scene.views = ring_views(scene.generator, scene.shading, scene.background,
                           n_views, width, height, 3.2, 0.9, 90.0, true);
  scene.cloud = scene.generator;
  return scene;
}

SyntheticScene make_grid(uint64_t seed, int width, int height, int n_views) {
  SyntheticScene scene;
  Rng rng(seed);
  const int side = 4;
  const double spacing = 0.5;
  for (int ix = 0; ix < side; ++ix) {
    for (int iy = 0; iy < side; ++iy) {
      for (int iz = 0; iz < side; ++iz) {
        Gaussian3D g;
        g.position = spacing * (Vec3(ix, iy, iz) - Vec3::Constant((side - 1) / 2.0));
        g.log_scale = Vec3::Constant(std::log(0.09));
        g.opacity_logit = logit(0.85);
        g.specular_logit = logit(0.1);
        set_albedo(g, Vec3(0.2 + 0.6 * ix / (side - 1.0), 0.2 + 0.6 * iy / (side - 1.0),
                           0.2 + 0.6 * iz / (side - 1.0)));
        // Small seeded orientation jitter keeps covariances generic.
        g.rotation = quat_z_to(Vec3(0.12 * rng.normal(), 0.12 * rng.normal(), 1.0)
                                   .normalized());
        scene.generator.gaussians.push_back(g);
      }
    }
  }
  scene.generator.update_bbox();

  scene.shading.mode = ShadingMode::kFull;
  scene.views = ring_views(scene.generator, scene.shading, scene.background,
                           n_views, width, height, 3.2, 1.1, 100.0, true);
  scene.cloud = scene.generator;
  return scene;
}

SyntheticScene make_mirror_lit(uint64_t seed, int width, int height, int n_views) {
  SyntheticScene scene;
  Rng rng(seed);
  const Vec3 light_dir(0, 0, 1);

  // Ground truth: a fine plane lattice with high-frequency albedo and
  // per-Gaussian specular lobes; a therefore sits close to 1 on most of the
  // plane. A subset is tilted so its normal is perpendicular to the light,
  // which only the specular term can brighten.
  const int gt_side = 16;
  const double half = 0.9;
  const double gt_spacing = 2.0 * half / (gt_side - 1);
  for (int ix = 0; ix < gt_side; ++ix) {
    for (int iy = 0; iy < gt_side; ++iy) {
      Gaussian3D g;
      g.position = Vec3(-half + ix * gt_spacing, -half + iy * gt_spacing, 0.0);
      g.log_scale = Vec3(std::log(0.75 * gt_spacing), std::log(0.75 * gt_spacing),
                         std::log(0.012));
      g.opacity_logit = logit(0.9);
      const bool checker = ((ix / 2) + (iy / 2)) % 2 == 0;
      Vec3 albedo = checker ? Vec3(0.62, 0.3, 0.24) : Vec3(0.24, 0.34, 0.62);
      albedo += Vec3(rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08),
                     rng.uniform(-0.08, 0.08));
      set_albedo(g, albedo);
      g.specular_logit = logit(0.82 + 0.1 * rng.uniform());
      const double kappa = 1.8 + 0.5 * rng.uniform();
      set_specular_lobe(g, light_dir,
                        Vec3(kappa, kappa * (0.85 + 0.3 * rng.uniform()),
                             kappa * (0.8 + 0.3 * rng.uniform())));
      if ((ix + gt_side * iy) % 5 == 0) {
        // Normal into the plane: cos(theta) = 0 against the light.
        g.rotation = quat_z_to(Vec3(std::cos(kTau * rng.uniform()),
                                    std::sin(kTau * rng.uniform()), 0.0));
      }
      scene.generator.gaussians.push_back(g);
    }
  }
  scene.generator.update_bbox();

  scene.shading.mode = ShadingMode::kFull;
  scene.shading.light_direction = light_dir;
  scene.views = ring_views(scene.generator, scene.shading, scene.background,
                           n_views, width, height, 1.7, 2.3, 70.0, false);

  // Trainable initialization: a coarser lattice with neutral appearance.
  const int init_side = 12;
  const double init_spacing = 2.0 * half / (init_side - 1);
  for (int ix = 0; ix < init_side; ++ix) {
    for (int iy = 0; iy < init_side; ++iy) {
      Gaussian3D g;
      g.position = Vec3(-half + ix * init_spacing, -half + iy * init_spacing, 0.0);
      g.log_scale = Vec3(std::log(0.7 * init_spacing), std::log(0.7 * init_spacing),
                         std::log(0.015));
      g.opacity_logit = logit(0.7);
      set_albedo(g, Vec3(0.45 + 0.1 * rng.normal(), 0.45 + 0.1 * rng.normal(),
                         0.45 + 0.1 * rng.normal()));
      g.specular_logit = logit(0.5) + 0.4 * rng.normal();
      set_specular_lobe(g, light_dir,
                        Vec3(0.4 + 0.3 * rng.normal(), 0.4 + 0.3 * rng.normal(),
                             0.4 + 0.3 * rng.normal()));
      scene.cloud.gaussians.push_back(g);
    }
  }
  scene.cloud.update_bbox();
  return scene;
}

}  // namespace

SyntheticScene make_synthetic(SyntheticSpec spec, uint64_t seed, int width,
                              int height, int n_views) {
  switch (spec) {
    case SyntheticSpec::kShell:
      return make_shell(seed, width, height, n_views);
    case SyntheticSpec::kGrid:
      return make_grid(seed, width, height, n_views);
    case SyntheticSpec::kMirrorLit:
      return make_mirror_lit(seed, width, height, n_views);
  }
  throw std::invalid_argument("make_synthetic: unknown spec");
}

SyntheticSpec parse_synthetic_spec(const std::string& name) {
  if (name == "shell") return SyntheticSpec::kShell;
  if (name == "grid") return SyntheticSpec::kGrid;
  if (name == "mirror-lit" || name == "mirror_lit") return SyntheticSpec::kMirrorLit;
  throw std::invalid_argument("unknown synthetic scene '" + name +
                              "' (expected shell, grid or mirror-lit)");
}

}  // namespace splat
