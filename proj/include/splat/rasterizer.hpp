#pragma once

#include <span>
#include <vector>

#include "splat/camera.hpp"
#include "splat/shading.hpp"

namespace splat {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // row-major, 3 channels, values in [0,1]

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(size_t(w) * h * 3, 0.0) {}

  double* pixel(int x, int y) { return data.data() + (size_t(y) * width + x) * 3; }
  const double* pixel(int x, int y) const {
    return data.data() + (size_t(y) * width + x) * 3;
  }
  Vec3 rgb(int x, int y) const {
    const double* p = pixel(x, y);
    return Vec3(p[0], p[1], p[2]);
  }
  void set_rgb(int x, int y, const Vec3& c) {
    double* p = pixel(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
};

// Per-tile splat index lists, sorted by (depth, source_index). A splat is
// listed in every tile its 3-sigma axis-aligned box touches.
struct TileGrid {
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<int32_t>> lists;

  const std::vector<int32_t>& tile(int tx, int ty) const {
    return lists[size_t(ty) * tiles_x + tx];
  }
};

// Opacity-weighted 2D Gaussian kernel. The kernel is truncated outside the
// splat's 3-sigma axis-aligned box (the same support used for tile binning)
// so tiled and brute-force compositing see identical splat sets per pixel.
double splat_alpha(const Splat2D& s, const Vec2& pixel);

TileGrid bin_tiles(const std::vector<Splat2D>& splats, int width, int height);

struct PixelResult {
  Vec3 color = Vec3::Zero();
  double transmittance = 1.0;
};

// Front-to-back alpha compositing over depth-ordered splats, including the
// background blend. Also returns the final transmittance.
PixelResult composite_pixel(const std::vector<Splat2D>& splats,
                            std::span<const int32_t> order, const Vec2& pixel,
                            const Vec3& background);
PixelResult composite_pixel(std::span<const Splat2D> ordered_splats,
                            const Vec2& pixel, const Vec3& background);

// Shades and projects the cloud for one view. Splats arrive in cloud order
// with source_index set; culled Gaussians are absent.
std::vector<Splat2D> prepare_splats(const Camera& cam, const GaussianCloud& cloud,
                                    const ShadingConfig& cfg);

// Tiled renderer (parallel over tiles).
Image render(const Camera& cam, const GaussianCloud& cloud,
             const ShadingConfig& cfg, const Vec3& background = Vec3::Zero());

// O(pixels x splats) single-threaded oracle with a global depth sort.
Image render_reference(const Camera& cam, const GaussianCloud& cloud,
                       const ShadingConfig& cfg,
                       const Vec3& background = Vec3::Zero());

}  // namespace splat
