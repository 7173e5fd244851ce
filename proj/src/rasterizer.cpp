#include "splat/rasterizer.hpp"

#include <algorithm>
#include <cmath>

namespace splat {

double splat_alpha(const Splat2D& s, const Vec2& pixel) {
  const Vec2 d = pixel - s.mean2d;
  if (std::abs(d[0]) > s.radius || std::abs(d[1]) > s.radius) return 0.0;
  const double maha2 = d.dot(s.conic * d);
  const double alpha = s.opacity * std::exp(-0.5 * maha2);
  return std::min(alpha, kAlphaClamp);
}

TileGrid bin_tiles(const std::vector<Splat2D>& splats, int width, int height) {
  TileGrid grid;
  grid.tiles_x = (width + kTileSize - 1) / kTileSize;
  grid.tiles_y = (height + kTileSize - 1) / kTileSize;
  grid.lists.assign(size_t(grid.tiles_x) * grid.tiles_y, {});

  for (int32_t i = 0; i < static_cast<int32_t>(splats.size()); ++i) {
    const Splat2D& s = splats[i];
    const int tx0 = std::clamp(int(std::floor((s.mean2d[0] - s.radius) / kTileSize)), 0,
                               grid.tiles_x - 1);
    const int tx1 = std::clamp(int(std::floor((s.mean2d[0] + s.radius) / kTileSize)), 0,
                               grid.tiles_x - 1);
    const int ty0 = std::clamp(int(std::floor((s.mean2d[1] - s.radius) / kTileSize)), 0,
                               grid.tiles_y - 1);
    const int ty1 = std::clamp(int(std::floor((s.mean2d[1] + s.radius) / kTileSize)), 0,
                               grid.tiles_y - 1);
    // Splats entirely outside the image still land in the clamped border
    // tile; reject those whose box misses the image.
    if (s.mean2d[0] + s.radius < 0 || s.mean2d[0] - s.radius > width ||
        s.mean2d[1] + s.radius < 0 || s.mean2d[1] - s.radius > height) {
      continue;
    }
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        grid.lists[size_t(ty) * grid.tiles_x + tx].push_back(i);
      }
    }
  }

  auto by_depth = [&splats](int32_t a, int32_t b) {
    if (splats[a].depth != splats[b].depth) return splats[a].depth < splats[b].depth;
    return splats[a].source_index < splats[b].source_index;
  };
  for (auto& list : grid.lists) std::sort(list.begin(), list.end(), by_depth);
  return grid;
}

PixelResult composite_pixel(const std::vector<Splat2D>& splats,
                            std::span<const int32_t> order, const Vec2& pixel,
                            const Vec3& background) {
  PixelResult out;
  double t = 1.0;
  for (int32_t idx : order) {
    const Splat2D& s = splats[idx];
    const double alpha = splat_alpha(s, pixel);
    if (alpha < kAlphaSkip) continue;
    out.color += (t * alpha) * s.color;
    t *= 1.0 - alpha;
    if (t < kTransmittanceStop) break;
  }
  out.transmittance = t;
  out.color += t * background;
  return out;
}

PixelResult composite_pixel(std::span<const Splat2D> ordered_splats,
                            const Vec2& pixel, const Vec3& background) {
  PixelResult out;
  double t = 1.0;
  for (const Splat2D& s : ordered_splats) {
    const double alpha = splat_alpha(s, pixel);
    if (alpha < kAlphaSkip) continue;
    out.color += (t * alpha) * s.color;
    t *= 1.0 - alpha;
    if (t < kTransmittanceStop) break;
  }
  out.transmittance = t;
  out.color += t * background;
  return out;
}

std::vector<Splat2D> prepare_splats(const Camera& cam, const GaussianCloud& cloud,
                                    const ShadingConfig& cfg) {
  const Vec3 view_pos = cam.position();
  std::vector<Splat2D> splats;
  splats.reserve(cloud.size());
  for (int32_t i = 0; i < static_cast<int32_t>(cloud.size()); ++i) {
    const Gaussian3D& g = cloud.gaussians[i];
    auto s = project_gaussian(cam, g, Vec3::Zero());
    if (!s) continue;
    s->color = shade_gaussian(g, cloud.global_light, view_pos, cfg);
    s->source_index = i;
    splats.push_back(*s);
  }
  return splats;
}

namespace {

void finalize_pixel(Image& img, int x, int y, const Vec3& c) {
  img.set_rgb(x, y, c.cwiseMax(0.0).cwiseMin(1.0));
}

}  // namespace

Image render(const Camera& cam, const GaussianCloud& cloud,
             const ShadingConfig& cfg, const Vec3& background) {
  const std::vector<Splat2D> splats = prepare_splats(cam, cloud, cfg);
  const TileGrid grid = bin_tiles(splats, cam.width, cam.height);

  Image img(cam.width, cam.height);
  const int n_tiles = grid.tiles_x * grid.tiles_y;
  parallel_for(n_tiles, [&](int64_t t) {
    const int tx = int(t % grid.tiles_x);
    const int ty = int(t / grid.tiles_x);
    const auto& list = grid.lists[size_t(t)];
    const int x1 = std::min((tx + 1) * kTileSize, cam.width);
    const int y1 = std::min((ty + 1) * kTileSize, cam.height);
    for (int y = ty * kTileSize; y < y1; ++y) {
      for (int x = tx * kTileSize; x < x1; ++x) {
        const Vec2 pixel(x + 0.5, y + 0.5);
        const PixelResult r = composite_pixel(splats, list, pixel, background);
        finalize_pixel(img, x, y, r.color);
      }
    }
  });
  return img;
}

Image render_reference(const Camera& cam, const GaussianCloud& cloud,
                       const ShadingConfig& cfg, const Vec3& background) {
  std::vector<Splat2D> splats = prepare_splats(cam, cloud, cfg);
  std::sort(splats.begin(), splats.end(), [](const Splat2D& a, const Splat2D& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.source_index < b.source_index;
  });

  Image img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec2 pixel(x + 0.5, y + 0.5);
      const PixelResult r =
          composite_pixel(std::span<const Splat2D>(splats), pixel, background);
      finalize_pixel(img, x, y, r.color);
    }
  }
  return img;
}

}  // namespace splat
