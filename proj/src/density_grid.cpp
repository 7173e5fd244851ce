#include "splat/density_grid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splat {

Eigen::Vector3i DensityGrid::containing_voxel(const Vec3& p) const {
  Eigen::Vector3i idx;
  for (int k = 0; k < 3; ++k) {
    const int i = int(std::floor((p[k] - origin[k]) / voxel_size));
    idx[k] = std::clamp(i, 0, dims[k] - 1);
  }
  return idx;
}

DensityGrid rasterize_density(const GaussianCloud& cloud, int resolution) {
  if (cloud.gaussians.empty()) {
    throw std::invalid_argument("rasterize_density: empty cloud");
  }
  Aabb box;
  for (const auto& g : cloud.gaussians) box.expand(g.position);

  DensityGrid grid;
  const double longest = std::max(box.extent().maxCoeff(), 1e-6);
  grid.voxel_size = longest / double(resolution);
  for (int k = 0; k < 3; ++k) {
    const int inner = int(std::ceil(box.extent()[k] / grid.voxel_size));
    grid.dims[k] = inner + 6;  // 3 padding voxels per side
  }
  grid.origin = box.min - Vec3::Constant(3.0 * grid.voxel_size);
  grid.values.assign(size_t(grid.dims[0]) * grid.dims[1] * grid.dims[2], 0.0);

  for (const auto& g : cloud.gaussians) {
    const Mat3 cov = build_covariance(g.log_scale, g.rotation);
    const Mat3 inv = cov.inverse();
    const double opacity = g.opacity();
    // Tight world AABB of the 3-sigma ellipsoid.
    Vec3 half;
    for (int k = 0; k < 3; ++k) half[k] = 3.0 * std::sqrt(cov(k, k));
    Eigen::Vector3i lo = grid.containing_voxel(g.position - half);
    Eigen::Vector3i hi = grid.containing_voxel(g.position + half);
    for (int z = lo[2]; z <= hi[2]; ++z) {
      for (int y = lo[1]; y <= hi[1]; ++y) {
        for (int x = lo[0]; x <= hi[0]; ++x) {
          const Vec3 d = grid.voxel_center(x, y, z) - g.position;
          const double maha2 = d.dot(inv * d);
          if (maha2 > 9.0) continue;
          grid.at(x, y, z) += opacity * std::exp(-0.5 * maha2);
        }
      }
    }
  }
  return grid;
}

Vec3 central_gradient(const DensityGrid& grid, const Eigen::Vector3i& idx) {
  if (!grid.is_interior(idx[0], idx[1], idx[2])) {
    throw std::out_of_range("central_gradient: index not interior");
  }
  const int x = idx[0], y = idx[1], z = idx[2];
  return Vec3(grid.at(x + 1, y, z) - grid.at(x - 1, y, z),
              grid.at(x, y + 1, z) - grid.at(x, y - 1, z),
              grid.at(x, y, z + 1) - grid.at(x, y, z - 1));
}

std::optional<Vec3> unit_normal(const Vec3& g_xyz) {
  const double mag = g_xyz.norm();
  if (mag <= kFlatGradientEps) return std::nullopt;
  return Vec3(g_xyz / mag);
}

NormalField build_normal_field(const DensityGrid& grid) {
  NormalField field;
  field.dims = grid.dims;
  const size_t n = size_t(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  field.normal.assign(n, Vec3::Zero());
  field.flat.assign(n, 1);
  for (int z = 1; z <= grid.dims[2] - 2; ++z) {
    for (int y = 1; y <= grid.dims[1] - 2; ++y) {
      for (int x = 1; x <= grid.dims[0] - 2; ++x) {
        const auto n_opt = unit_normal(central_gradient(grid, {x, y, z}));
        if (!n_opt) continue;
        const size_t i = field.index(x, y, z);
        field.normal[i] = *n_opt;
        field.flat[i] = 0;
      }
    }
  }
  return field;
}

double normal_gradient(const NormalField& normals, const Eigen::Vector3i& idx) {
  const int x = idx[0], y = idx[1], z = idx[2];
  auto interior = [&](int ax, int ay, int az) {
    return ax >= 1 && ax <= normals.dims[0] - 2 && ay >= 1 &&
           ay <= normals.dims[1] - 2 && az >= 1 && az <= normals.dims[2] - 2;
  };
  if (!interior(x, y, z) || !interior(x + 1, y, z) || !interior(x, y + 1, z) ||
      !interior(x, y, z + 1)) {
    throw std::out_of_range("normal_gradient: index or +1 neighbor not interior");
  }
  const size_t center = normals.index(x, y, z);
  if (normals.flat[center]) return 0.0;
  double sum = 0.0;
  const Eigen::Vector3i steps[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (const auto& s : steps) {
    const size_t nb = normals.index(x + s[0], y + s[1], z + s[2]);
    if (normals.flat[nb]) continue;  // FLAT endpoint: axis contributes zero
    const Vec3 diff = normals.normal[nb] - normals.normal[center];
    sum += diff.squaredNorm();
  }
  return std::sqrt(sum);
}

double fuse_gradient(double g_geo, double g_norm, double omega,
                     double denom_geo, double denom_norm) {
  if (!(denom_geo > 0.0) || !(denom_norm > 0.0)) {
    throw std::invalid_argument("fuse_gradient: non-positive denominator");
  }
  return (1.0 - omega) * (g_geo / denom_geo) + omega * (g_norm / denom_norm);
}

FusedGradientField build_fused_gradient_field(const DensityGrid& grid,
                                              double omega) {
  FusedGradientField field;
  field.dims = grid.dims;
  const size_t n = size_t(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  field.geo.assign(n, 0.0);
  field.norm.assign(n, 0.0);
  field.fused.assign(n, 0.0);

  const NormalField normals = build_normal_field(grid);
  for (int z = 1; z <= grid.dims[2] - 2; ++z) {
    for (int y = 1; y <= grid.dims[1] - 2; ++y) {
      for (int x = 1; x <= grid.dims[0] - 2; ++x) {
        const size_t i = field.index(x, y, z);
        field.geo[i] = central_gradient(grid, {x, y, z}).norm();
        field.denom_geo = std::max(field.denom_geo, field.geo[i]);
        // Normal differences need the +1 neighbors inside the interior.
        if (x <= grid.dims[0] - 3 && y <= grid.dims[1] - 3 &&
            z <= grid.dims[2] - 3) {
          field.norm[i] = normal_gradient(normals, {x, y, z});
          field.denom_norm = std::max(field.denom_norm, field.norm[i]);
        }
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    field.fused[i] = fuse_gradient(field.geo[i], field.norm[i], omega,
                                   field.denom_geo, field.denom_norm);
  }
  return field;
}

}  // namespace splat
