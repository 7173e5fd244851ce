#include <algorithm>

#include "doctest.h"
#include "splat/rasterizer.hpp"
#include "splat/synthetic.hpp"

using namespace splat;

namespace {

Splat2D make_splat(const Vec2& mean, double var, double opacity, const Vec3& color,
                   double depth, int32_t index) {
  Splat2D s;
  s.mean2d = mean;
  s.cov2d = var * Mat2::Identity();
  s.depth = depth;
  s.color = color;
  s.opacity = opacity;
  s.source_index = index;
  s.finalize();
  return s;
}

// Scalar re-evaluation of the compositing sum, written independently of
// composite_pixel: same kernel definition, explicit 2x2 inverse.
Vec3 composite_oracle(const std::vector<Splat2D>& splats, const Vec2& pixel,
                      const Vec3& background, double* t_out = nullptr,
                      double* weight_sum = nullptr) {
  std::vector<const Splat2D*> order;
  for (const auto& s : splats) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const Splat2D* a, const Splat2D* b) {
    if (a->depth != b->depth) return a->depth < b->depth;
    return a->source_index < b->source_index;
  });
  Vec3 color = Vec3::Zero();
  double t = 1.0, wsum = 0.0;
  for (const Splat2D* s : order) {
    const double dx = pixel[0] - s->mean2d[0];
    const double dy = pixel[1] - s->mean2d[1];
    if (std::abs(dx) > s->radius || std::abs(dy) > s->radius) continue;
    const double a = s->cov2d(0, 0), b = s->cov2d(0, 1), c = s->cov2d(1, 1);
    const double det = a * c - b * b;
    const double maha = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
    double alpha = std::min(s->opacity * std::exp(-0.5 * maha), 0.99);
    if (alpha < 1.0 / 255.0) continue;
    color += t * alpha * s->color;
    wsum += t * alpha;
    t *= 1.0 - alpha;
    if (t < 1e-4) break;
  }
  if (t_out) *t_out = t;
  if (weight_sum) *weight_sum = wsum;
  return color + t * background;
}

GaussianCloud random_cloud(Rng& rng, int count, double spread = 1.2) {
  GaussianCloud cloud;
  for (int i = 0; i < count; ++i) {
    Gaussian3D g;
    g.position = spread * Vec3(rng.normal(), rng.normal(), rng.normal());
    g.log_scale = Vec3(rng.uniform(-3.5, -1.2), rng.uniform(-3.5, -1.2),
                       rng.uniform(-3.5, -1.2));
    Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    g.rotation = q.normalized();
    g.opacity_logit = logit(rng.uniform(0.15, 0.95));
    g.specular_logit = logit(rng.uniform(0.05, 0.9));
    for (int r = 0; r < kShCoeffCount; ++r) {
      const double amp = r == 0 ? 0.5 : 0.1;
      for (int c = 0; c < 3; ++c) {
        g.sh_diffuse(r, c) = amp * rng.normal();
        g.sh_specular(r, c) = amp * rng.normal();
      }
    }
    cloud.gaussians.push_back(g);
  }
  cloud.update_bbox();
  return cloud;
}

}  // namespace

TEST_CASE("bin_tiles: single interior splat lands in exactly one tile") {
  std::vector<Splat2D> splats{make_splat(Vec2(8, 8), 1.0, 0.8, Vec3(1, 0, 0), 1, 0)};
  const TileGrid grid = bin_tiles(splats, 64, 64);
  int hits = 0;
  for (const auto& list : grid.lists) hits += int(list.size());
  CHECK(hits == 1);
  CHECK(grid.tile(0, 0).size() == 1);
}

TEST_CASE("bin_tiles: corner-straddling splat lands in all four tiles") {
  std::vector<Splat2D> splats{make_splat(Vec2(16, 16), 4.0, 0.8, Vec3(1, 0, 0), 1, 0)};
  const TileGrid grid = bin_tiles(splats, 64, 64);
  CHECK(grid.tile(0, 0).size() == 1);
  CHECK(grid.tile(1, 0).size() == 1);
  CHECK(grid.tile(0, 1).size() == 1);
  CHECK(grid.tile(1, 1).size() == 1);
}

TEST_CASE("bin_tiles membership equals brute-force box/tile intersection") {
  Rng rng(53);
  std::vector<Splat2D> splats;
  for (int i = 0; i < 120; ++i) {
    splats.push_back(make_splat(Vec2(rng.uniform(-20, 84), rng.uniform(-20, 84)),
                                rng.uniform(0.4, 30.0), rng.uniform(0.2, 0.99),
                                Vec3(1, 1, 1), rng.uniform(0.5, 9.0), i));
  }
  const int w = 64, h = 64;
  const TileGrid grid = bin_tiles(splats, w, h);
  for (int ty = 0; ty < grid.tiles_y; ++ty) {
    for (int tx = 0; tx < grid.tiles_x; ++tx) {
      std::vector<int32_t> expected;
      for (int32_t i = 0; i < int32_t(splats.size()); ++i) {
        const Splat2D& s = splats[i];
        if (s.mean2d[0] + s.radius < 0 || s.mean2d[0] - s.radius > w ||
            s.mean2d[1] + s.radius < 0 || s.mean2d[1] - s.radius > h) {
          continue;
        }
        // Axis-aligned 3-sigma box against the tile rectangle, clamped to
        // the image the way the binner clamps.
        const int tx0 = std::clamp(int(std::floor((s.mean2d[0] - s.radius) / kTileSize)),
                                   0, grid.tiles_x - 1);
        const int tx1 = std::clamp(int(std::floor((s.mean2d[0] + s.radius) / kTileSize)),
                                   0, grid.tiles_x - 1);
        const int ty0 = std::clamp(int(std::floor((s.mean2d[1] - s.radius) / kTileSize)),
                                   0, grid.tiles_y - 1);
        const int ty1 = std::clamp(int(std::floor((s.mean2d[1] + s.radius) / kTileSize)),
                                   0, grid.tiles_y - 1);
        if (tx >= tx0 && tx <= tx1 && ty >= ty0 && ty <= ty1) expected.push_back(i);
      }
      auto actual = grid.tile(tx, ty);
      std::sort(actual.begin(), actual.end());
      std::sort(expected.begin(), expected.end());
      CHECK(actual == expected);
    }
  }
}

TEST_CASE("tile lists are depth sorted with index tiebreak") {
  Rng rng(59);
  std::vector<Splat2D> splats;
  for (int i = 0; i < 40; ++i) {
    splats.push_back(make_splat(Vec2(rng.uniform(0, 64), rng.uniform(0, 64)), 25.0,
                                0.5, Vec3(1, 1, 1), i % 5, i));
  }
  const TileGrid grid = bin_tiles(splats, 64, 64);
  for (const auto& list : grid.lists) {
    for (size_t j = 1; j < list.size(); ++j) {
      const Splat2D& a = splats[list[j - 1]];
      const Splat2D& b = splats[list[j]];
      const bool ordered =
          a.depth < b.depth || (a.depth == b.depth && a.source_index < b.source_index);
      CHECK(ordered);
    }
  }
}

TEST_CASE("composite_pixel single opaque splat clamps at 0.99") {
  std::vector<Splat2D> splats{
      make_splat(Vec2(5, 5), 1.0, 0.9999999, Vec3(1, 0, 0), 1, 0)};
  const auto result = composite_pixel(std::span<const Splat2D>(splats), Vec2(5, 5),
                                      Vec3::Zero());
  CHECK(result.color[0] == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(result.color[1] == 0.0);
  CHECK(result.transmittance == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("composite_pixel two half-opacity splats") {
  std::vector<Splat2D> splats{make_splat(Vec2(5, 5), 1e8, 0.5, Vec3(1, 0, 0), 1, 0),
                              make_splat(Vec2(5, 5), 1e8, 0.5, Vec3(0, 1, 0), 2, 1)};
  const auto result = composite_pixel(std::span<const Splat2D>(splats), Vec2(5, 5),
                                      Vec3::Zero());
  // Huge variance makes the kernel 1 at the center: 0.5 A + 0.25 B.
  CHECK(result.color[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(result.color[1] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(result.transmittance == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("composite_pixel matches the scalar oracle on random stacks") {
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Splat2D> splats;
    const int n = 10;
    for (int i = 0; i < n; ++i) {
      splats.push_back(make_splat(
          Vec2(rng.uniform(2, 12), rng.uniform(2, 12)), rng.uniform(0.5, 20.0),
          rng.uniform(0.1, 0.999), Vec3(rng.uniform(), rng.uniform(), rng.uniform()),
          rng.uniform(0.5, 5.0), i));
    }
    std::sort(splats.begin(), splats.end(),
              [](const Splat2D& a, const Splat2D& b) { return a.depth < b.depth; });
    const Vec2 pixel(rng.uniform(0, 14), rng.uniform(0, 14));
    const Vec3 bg(rng.uniform(), rng.uniform(), rng.uniform());
    const auto result = composite_pixel(std::span<const Splat2D>(splats), pixel, bg);
    const Vec3 expected = composite_oracle(splats, pixel, bg);
    CHECK((result.color - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("compositing conserves weight: sum(T_i alpha_i) + T_final = 1") {
  Rng rng(67);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Splat2D> splats;
    const int n = 1 + int(rng.index(12));
    for (int i = 0; i < n; ++i) {
      splats.push_back(make_splat(
          Vec2(rng.uniform(0, 10), rng.uniform(0, 10)), rng.uniform(0.5, 15.0),
          rng.uniform(0.05, 0.999), Vec3(1, 1, 1), rng.uniform(0.5, 5.0), i));
    }
    const Vec2 pixel(rng.uniform(0, 10), rng.uniform(0, 10));
    double t_final = 0.0, wsum = 0.0;
    composite_oracle(splats, pixel, Vec3::Zero(), &t_final, &wsum);
    const auto result =
        composite_pixel(std::span<const Splat2D>(splats), pixel, Vec3::Zero());
    CHECK(result.transmittance == doctest::Approx(t_final).epsilon(1e-12));
    CHECK(wsum + t_final == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("transmittance is non-increasing front to back") {
  Rng rng(71);
  std::vector<Splat2D> splats;
  for (int i = 0; i < 8; ++i) {
    splats.push_back(make_splat(Vec2(4, 4), rng.uniform(1, 8), rng.uniform(0.2, 0.9),
                                Vec3(1, 1, 1), i + 1.0, i));
  }
  double t = 1.0;
  for (size_t i = 0; i < splats.size(); ++i) {
    const auto partial = composite_pixel(
        std::span<const Splat2D>(splats.data(), i + 1), Vec2(4, 4), Vec3::Zero());
    CHECK(partial.transmittance <= t + 1e-15);
    t = partial.transmittance;
  }
}

TEST_CASE("depth order changes the composited color") {
  std::vector<Splat2D> ab{make_splat(Vec2(4, 4), 4.0, 0.8, Vec3(1, 0, 0), 1, 0),
                          make_splat(Vec2(4, 4), 4.0, 0.8, Vec3(0, 0, 1), 2, 1)};
  std::vector<Splat2D> ba{ab[1], ab[0]};
  const Vec3 first =
      composite_pixel(std::span<const Splat2D>(ab), Vec2(4, 4), Vec3::Zero()).color;
  const Vec3 second =
      composite_pixel(std::span<const Splat2D>(ba), Vec2(4, 4), Vec3::Zero()).color;
  CHECK((first - second).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("render of an empty cloud is the background") {
  GaussianCloud cloud;
  Camera cam = look_at_camera(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), 32, 32, 40);
  const Vec3 bg(0.25, 0.5, 0.75);
  const Image img = render(cam, cloud, ShadingConfig{}, bg);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      CHECK((img.rgb(x, y) - bg).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("single opaque gaussian peaks at its projected mean") {
  GaussianCloud cloud;
  Gaussian3D g;
  g.position = Vec3(0.12, -0.08, 0);
  g.log_scale = Vec3::Constant(std::log(0.05));
  g.opacity_logit = logit(0.99);
  cloud.gaussians.push_back(g);
  cloud.update_bbox();

  Camera cam = look_at_camera(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), 64, 64, 120);
  const Image img = render(cam, cloud, ShadingConfig{}, Vec3::Zero());

  const auto splat = project_gaussian(cam, g, Vec3::Zero());
  REQUIRE(splat.has_value());
  int best_x = 0, best_y = 0;
  double best = -1.0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double lum = img.rgb(x, y).sum();
      if (lum > best) {
        best = lum;
        best_x = x;
        best_y = y;
      }
    }
  }
  CHECK(std::abs(best_x + 0.5 - splat->mean2d[0]) <= 1.0);
  CHECK(std::abs(best_y + 0.5 - splat->mean2d[1]) <= 1.0);
  CHECK(best > 0.0);
}

TEST_CASE("tiled renderer equals the reference renderer") {
  Rng rng(73);
  for (int trial = 0; trial < 5; ++trial) {
    const GaussianCloud cloud = random_cloud(rng, 60);
    const double phi = rng.uniform(0, 6.28);
    Camera cam = look_at_camera(Vec3(3 * std::cos(phi), 3 * std::sin(phi), 1.2),
                                Vec3::Zero(), Vec3(0, 0, 1), 64, 64, 80);
    const Vec3 bg(rng.uniform(), rng.uniform(), rng.uniform());
    ShadingConfig cfg;
    const Image tiled = render(cam, cloud, cfg, bg);
    const Image reference = render_reference(cam, cloud, cfg, bg);
    double max_diff = 0.0;
    for (size_t i = 0; i < tiled.data.size(); ++i) {
      max_diff = std::max(max_diff, std::abs(tiled.data[i] - reference.data[i]));
    }
    CHECK(max_diff <= 1e-5);
  }
}
