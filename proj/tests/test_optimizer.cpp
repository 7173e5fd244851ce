#include <cmath>

#include "doctest.h"
#include "splat/loss.hpp"
#include "splat/shading_detail.hpp"
#include "splat/synthetic.hpp"
#include "splat/train.hpp"

using namespace splat;

namespace {

GaussianCloud gradient_test_cloud(Rng& rng, int count) {
  // Mid-range opacities and colors keep the scene away from clamp
  // boundaries, where the analytic subgradient legitimately differs from
  // central differences.
  GaussianCloud cloud;
  for (int i = 0; i < count; ++i) {
    Gaussian3D g;
    g.position = 0.5 * Vec3(rng.normal(), rng.normal(), rng.normal());
    g.log_scale = Vec3(rng.uniform(-2.6, -1.6), rng.uniform(-2.6, -1.6),
                       rng.uniform(-2.6, -1.6));
    Vec4 q(1.0 + 0.3 * rng.normal(), 0.3 * rng.normal(), 0.3 * rng.normal(),
           0.3 * rng.normal());
    g.rotation = q.normalized();
    g.opacity_logit = logit(rng.uniform(0.35, 0.75));
    g.specular_logit = logit(rng.uniform(0.3, 0.7));
    g.visibility = rng.uniform(0.4, 0.9);
    g.local_light = Vec3(rng.uniform(0.0, 0.15), rng.uniform(0.0, 0.15),
                         rng.uniform(0.0, 0.15));
    for (int r = 0; r < kShCoeffCount; ++r) {
      const double amp = r == 0 ? 0.25 : 0.06;
      for (int c = 0; c < 3; ++c) {
        g.sh_diffuse(r, c) = amp * rng.normal();
        g.sh_specular(r, c) = amp * rng.normal();
      }
    }
    cloud.gaussians.push_back(g);
  }
  cloud.global_light = Vec3(0.9, 0.85, 0.95);
  cloud.update_bbox();
  return cloud;
}

Image noisy_target(Rng& rng, const Image& base) {
  Image gt = base;
  for (double& v : gt.data) v = std::clamp(v + 0.15 * rng.normal(), 0.0, 1.0);
  return gt;
}

double fd_step_size(const ParamRef& ref) {
  switch (ref.field) {
    case ParamField::kShDiffuse:
    case ParamField::kShSpecular:
      return 1e-5;
    default:
      return 1e-4;
  }
}

}  // namespace

TEST_CASE("loss basics") {
  Image a(16, 16), b(16, 16);
  for (size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = 0.25 + 0.5 * ((i * 37) % 11) / 11.0;
    b.data[i] = a.data[i];
  }
  CHECK(loss(a, b, 0.2) == doctest::Approx(0.0).epsilon(1e-12));

  std::fill(a.data.begin(), a.data.end(), 0.75);
  std::fill(b.data.begin(), b.data.end(), 0.25);
  CHECK(loss(a, b, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("loss matches an independent two-term recomputation") {
  Rng rng(601);
  Image a(20, 16), b(20, 16);
  for (double& v : a.data) v = rng.uniform();
  for (double& v : b.data) v = rng.uniform();
  const double lambda = 0.2;
  double l1 = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) l1 += std::abs(a.data[i] - b.data[i]);
  l1 /= double(a.data.size());
  const double expected = (1 - lambda) * l1 + lambda * (1.0 - ssim(a, b));
  CHECK(loss(a, b, lambda) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(loss(Image(8, 8), Image(9, 8), 0.0), std::invalid_argument);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  Rng rng(603);
  GaussianCloud cloud = gradient_test_cloud(rng, 3);
  const GaussianCloud before = cloud;
  GradientBundle grads;
  grads.resize(cloud.size());
  AdamState state;
  state.resize(cloud.size());
  TrainConfig cfg;
  adam_step(cloud, grads, state, cfg);
  for (size_t i = 0; i < cloud.size(); ++i) {
    CHECK((cloud.gaussians[i].position - before.gaussians[i].position).norm() == 0.0);
    CHECK(cloud.gaussians[i].opacity_logit == before.gaussians[i].opacity_logit);
  }
  CHECK((cloud.global_light - before.global_light).norm() == 0.0);
}

TEST_CASE("adam: one step descends on x^2") {
  // Drive a single scalar parameter with the gradient of f(x) = x^2 at
  // x = 1 and check the step moves it downhill.
  GaussianCloud cloud;
  cloud.gaussians.emplace_back();
  cloud.gaussians[0].opacity_logit = 1.0;
  GradientBundle grads;
  grads.resize(1);
  grads.opacity_logit[0] = 2.0;  // d(x^2)/dx at x=1
  AdamState state;
  state.resize(1);
  TrainConfig cfg;
  cfg.lr_opacity = 0.1;
  adam_step(cloud, grads, state, cfg);
  CHECK(cloud.gaussians[0].opacity_logit < 1.0);
  CHECK(cloud.gaussians[0].opacity_logit > 0.5);
}

TEST_CASE("adam moment math follows the textbook recurrence for 10 steps") {
  GaussianCloud cloud;
  cloud.gaussians.emplace_back();
  cloud.gaussians[0].visibility = 0.5;
  AdamState state;
  state.resize(1);
  TrainConfig cfg;
  cfg.lr_lighting = 0.01;

  // Scalar reference implementation.
  double x = 0.5, m = 0.0, v = 0.0;
  Rng rng(605);
  for (int t = 1; t <= 10; ++t) {
    const double g = rng.normal();
    GradientBundle grads;
    grads.resize(1);
    grads.visibility[0] = g;
    adam_step(cloud, grads, state, cfg);

    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double m_hat = m / (1.0 - std::pow(0.9, t));
    const double v_hat = v / (1.0 - std::pow(0.999, t));
    x -= 0.01 * m_hat / (std::sqrt(v_hat) + 1e-15);
    x = std::clamp(x, 0.0, 1.0);  // visibility projection
    CHECK(cloud.gaussians[0].visibility == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("adam rejects non-finite gradients with the parameter name") {
  GaussianCloud cloud;
  cloud.gaussians.emplace_back();
  GradientBundle grads;
  grads.resize(1);
  grads.log_scale[0][1] = std::numeric_limits<double>::quiet_NaN();
  AdamState state;
  TrainConfig cfg;
  CHECK_THROWS_WITH_AS(adam_step(cloud, grads, state, cfg),
                       doctest::Contains("log_scale[0]"), std::runtime_error);
}

TEST_CASE("quaternions stay unit after steps") {
  Rng rng(607);
  GaussianCloud cloud = gradient_test_cloud(rng, 4);
  AdamState state;
  TrainConfig cfg;
  for (int t = 0; t < 5; ++t) {
    GradientBundle grads;
    grads.resize(cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i) {
      grads.rotation[i] = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    }
    adam_step(cloud, grads, state, cfg);
  }
  for (const auto& g : cloud.gaussians) {
    CHECK(g.rotation.norm() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("backward: rendering a gaussian against itself gives zero gradients") {
  Rng rng(609);
  GaussianCloud cloud = gradient_test_cloud(rng, 1);
  Camera cam = look_at_camera(Vec3(0, -0.4, 2.2), cloud.gaussians[0].position,
                              Vec3(0, 0, 1), 32, 32, 60);
  ShadingConfig cfg;
  const Image self = render(cam, cloud, cfg, Vec3::Zero());
  const BackwardResult res = backward(cloud, cam, self, cfg, 0.2, Vec3::Zero());
  CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-12));
  for (const auto& ref : enumerate_params(cloud)) {
    CHECK(std::abs(bundle_value(res.grads, ref)) < 1e-12);
  }
}

TEST_CASE("compose_color blend-weight partial has the closed form") {
  Rng rng(611);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 d(rng.normal(), rng.normal(), rng.normal());
    const Vec3 s(rng.normal(), rng.normal(), rng.normal());
    const double cos_t = rng.uniform();
    const double a = rng.uniform();
    const Vec3 analytic = compose_color_grad_a(d, s, cos_t);
    const double h = 1e-6;
    const Vec3 fd = (compose_color(d, s, a + h, cos_t) -
                     compose_color(d, s, a - h, cos_t)) / (2 * h);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((analytic - (s - cos_t * d)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("analytic backward agrees with central finite differences") {
  Rng rng(613);
  GaussianCloud cloud = gradient_test_cloud(rng, 3);
  Camera cam = look_at_camera(Vec3(0.4, -2.4, 1.4), Vec3::Zero(), Vec3(0, 0, 1),
                              32, 32, 50);
  ShadingConfig cfg;
  const double lambda = 0.2;
  const Vec3 bg(0.1, 0.1, 0.1);

  const Image base = render(cam, cloud, cfg, bg);
  const Image gt = noisy_target(rng, base);
  const BackwardResult res = backward(cloud, cam, gt, cfg, lambda, bg);

  const auto params = enumerate_params(cloud);
  int checked = 0, agreed = 0;
  for (size_t k = 0; k < params.size(); k += 3) {  // subsample for speed
    const ParamRef& ref = params[k];
    const double analytic = bundle_value(res.grads, ref);
    const double fd =
        fd_gradient(cloud, cam, gt, cfg, lambda, bg, ref, fd_step_size(ref));
    const double denom = std::max(std::abs(analytic), std::abs(fd));
    if (denom <= 1e-8) continue;
    ++checked;
    if (std::abs(analytic - fd) / denom <= 1e-3) ++agreed;
  }
  REQUIRE(checked > 50);
  CHECK(double(agreed) >= 0.95 * double(checked));
}

TEST_CASE("fd_gradient: culled parameter has zero derivative") {
  Rng rng(617);
  GaussianCloud cloud = gradient_test_cloud(rng, 2);
  cloud.gaussians[1].position = Vec3(0, 0, 100.0);  // far behind the far plane
  Camera cam = look_at_camera(Vec3(0, -2.4, 1.0), Vec3::Zero(), Vec3(0, 0, 1),
                              32, 32, 50);
  cam.far = 10.0;
  ShadingConfig cfg;
  const Image gt = render(cam, cloud, cfg, Vec3::Zero());
  const ParamRef ref{ParamField::kShDiffuse, 1, 0};
  CHECK(fd_gradient(cloud, cam, gt, cfg, 0.2, Vec3::Zero(), ref, 1e-4) == 0.0);
}

TEST_CASE("central differences are exact on quadratics") {
  // The fd core is (f(x+h) - f(x-h)) / 2h; on a quadratic this is exact up
  // to rounding for any h.
  auto f = [](double x) { return 3.0 * x * x - 2.0 * x + 7.0; };
  for (double x : {-1.0, 0.0, 2.5}) {
    for (double h : {1e-2, 1e-4}) {
      const double fd = (f(x + h) - f(x - h)) / (2 * h);
      CHECK(fd == doctest::Approx(6.0 * x - 2.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("train: zero iterations leaves the cloud unchanged") {
  Rng rng(619);
  GaussianCloud cloud = gradient_test_cloud(rng, 4);
  const GaussianCloud before = cloud;
  std::vector<TrainView> views;
  TrainView v;
  v.camera = look_at_camera(Vec3(0, -2, 1), Vec3::Zero(), Vec3(0, 0, 1), 32, 32, 50);
  v.gt = Image(32, 32);
  views.push_back(v);
  TrainConfig cfg;
  cfg.iterations = 0;
  const TrainResult result = train(cloud, views, cfg, DensifyConfig{}, ShadingConfig{});
  CHECK(result.log.empty());
  for (size_t i = 0; i < cloud.size(); ++i) {
    CHECK((cloud.gaussians[i].position - before.gaussians[i].position).norm() == 0.0);
  }
  CHECK_THROWS_AS(train(cloud, {}, cfg, DensifyConfig{}, ShadingConfig{}),
                  std::invalid_argument);
}

TEST_CASE("train: loss drops substantially on a small overfit") {
  SyntheticScene scene = make_synthetic(SyntheticSpec::kGrid, 3, 32, 32, 3);
  // Perturb the colors so there is something to learn.
  Rng rng(621);
  for (auto& g : scene.cloud.gaussians) {
    for (int c = 0; c < 3; ++c) g.sh_diffuse(0, c) += 0.4 * rng.normal();
  }
  TrainConfig cfg;
  cfg.iterations = 300;
  cfg.densify_from = 1 << 30;  // never
  DensifyConfig dcfg;
  GaussianCloud cloud = scene.cloud;
  const TrainResult result =
      train(cloud, scene.views, cfg, dcfg, scene.shading, scene.background);
  REQUIRE(result.log.size() == 300);
  // Per-view losses differ; compare epoch-balanced windows (30 = 10 epochs).
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 30; ++i) {
    first += result.log[i].loss / 30.0;
    last += result.log[300 - 30 + i].loss / 30.0;
  }
  CHECK(last < 0.5 * first);
}

TEST_CASE("train runs are bit-deterministic for a fixed seed") {
  SyntheticScene scene = make_synthetic(SyntheticSpec::kGrid, 5, 32, 32, 2);
  TrainConfig cfg;
  cfg.iterations = 25;
  cfg.seed = 42;
  cfg.densify_from = 10;
  DensifyConfig dcfg;
  dcfg.densify_interval = 10;
  dcfg.grid_resolution = 24;

  auto run = [&] {
    GaussianCloud cloud = scene.cloud;
    const TrainResult r =
        train(cloud, scene.views, cfg, dcfg, scene.shading, scene.background);
    std::string log;
    for (const auto& e : r.log) log += format_log_line(e) + "\n";
    return std::make_pair(cloud, log);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.second == b.second);
  REQUIRE(a.first.size() == b.first.size());
  for (size_t i = 0; i < a.first.size(); ++i) {
    CHECK(a.first.gaussians[i].position == b.first.gaussians[i].position);
    CHECK(a.first.gaussians[i].sh_diffuse == b.first.gaussians[i].sh_diffuse);
  }
}
