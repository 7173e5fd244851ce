#pragma once

#include <optional>
#include <vector>

#include "splat/gaussian.hpp"

namespace splat {

// Regular voxel grid of scalar density. Voxel (x, y, z) is centered at
// origin + (x+.5, y+.5, z+.5) * voxel_size. Index layout is x-fastest.
struct DensityGrid {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  std::vector<double> values;

  size_t index(int x, int y, int z) const {
    return (size_t(z) * dims[1] + y) * dims[0] + x;
  }
  double at(int x, int y, int z) const { return values[index(x, y, z)]; }
  double& at(int x, int y, int z) { return values[index(x, y, z)]; }
  Vec3 voxel_center(int x, int y, int z) const {
    return origin + voxel_size * Vec3(x + 0.5, y + 0.5, z + 0.5);
  }
  // Voxel containing a world point, clamped to the grid.
  Eigen::Vector3i containing_voxel(const Vec3& p) const;
  bool is_interior(int x, int y, int z) const {
    return x >= 1 && x <= dims[0] - 2 && y >= 1 && y <= dims[1] - 2 &&
           z >= 1 && z <= dims[2] - 2;
  }
};

// Opacity-weighted density splatted onto a grid spanning the cloud bbox
// padded by 3 voxels; per-Gaussian contributions truncated beyond the
// 3-sigma Mahalanobis radius. resolution caps voxels along the longest
// bbox edge. Throws on an empty cloud.
DensityGrid rasterize_density(const GaussianCloud& cloud, int resolution);

// Index-unit central differences V(x+1)-V(x-1) per axis. Throws on a
// non-interior index.
Vec3 central_gradient(const DensityGrid& grid, const Eigen::Vector3i& idx);

inline constexpr double kFlatGradientEps = 1e-12;

// Normalized gradient, or nullopt for a FLAT voxel (|G| <= eps).
std::optional<Vec3> unit_normal(const Vec3& g_xyz);

// Per-voxel unit normals with a FLAT mask, interior voxels only.
struct NormalField {
  Eigen::Vector3i dims;
  std::vector<Vec3> normal;
  std::vector<uint8_t> flat;  // 1 = FLAT or boundary

  size_t index(int x, int y, int z) const {
    return (size_t(z) * dims[1] + y) * dims[0] + x;
  }
};

NormalField build_normal_field(const DensityGrid& grid);

// Forward-difference normal change across the +x/+y/+z faces collapsed to
// one scalar (the modulus over all nine components). Axes with a FLAT
// endpoint contribute zero; a FLAT center gives zero. Throws when idx or a
// +1 neighbor is not interior.
double normal_gradient(const NormalField& normals, const Eigen::Vector3i& idx);

// (1-omega) * g_geo/denom_geo + omega * g_norm/denom_norm. Throws on a
// non-positive denominator.
double fuse_gradient(double g_geo, double g_norm, double omega,
                     double denom_geo, double denom_norm);

// Fused, normalized gradient magnitude per interior voxel (zero on the
// boundary). Normal-change terms at the +faces, where the forward
// difference has no interior neighbor, contribute zero. Denominators are
// the interior maxima floored at 1e-12.
struct FusedGradientField {
  Eigen::Vector3i dims;
  std::vector<double> geo;    // |G_xyz|
  std::vector<double> norm;   // G_norm
  std::vector<double> fused;  // normalized blend
  double denom_geo = kFlatGradientEps;
  double denom_norm = kFlatGradientEps;

  size_t index(int x, int y, int z) const {
    return (size_t(z) * dims[1] + y) * dims[0] + x;
  }
};

FusedGradientField build_fused_gradient_field(const DensityGrid& grid,
                                              double omega);

}  // namespace splat
