#include "splat/densify.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace splat {

int assign_level(double accumulated_grad, const DensifyConfig& cfg) {
  if (cfg.strategy == DensifyStrategy::kNone) return 0;
  int level = 0;
  for (double t : cfg.thresholds) {
    if (t <= accumulated_grad) ++level;
  }
  if (cfg.strategy == DensifyStrategy::kDense && !cfg.thresholds.empty()) {
    const double last = cfg.thresholds.back();
    if (accumulated_grad >= last) {
      level += int(std::floor((accumulated_grad - last) / 0.5));
    }
  }
  return level;
}

std::vector<Gaussian3D> split_gaussian(const Gaussian3D& g, int level,
                                       int level_cap) {
  assert(level >= 1);
  const int rounds = std::min(level, level_cap);
  std::vector<Gaussian3D> out{g};
  std::vector<Gaussian3D> next;
  const double shrink = std::log(1.6);
  for (int r = 0; r < rounds; ++r) {
    next.clear();
    next.reserve(out.size() * 2);
    for (const Gaussian3D& parent : out) {
      const Vec3 scales = parent.scales();
      int axis = 0;
      scales.maxCoeff(&axis);
      const Vec3 dir = rotation_matrix(parent.rotation).col(axis);
      const Vec3 offset = 0.5 * scales[axis] * dir;
      Gaussian3D child = parent;
      child.log_scale -= Vec3::Constant(shrink);
      child.position = parent.position + offset;
      next.push_back(child);
      child.position = parent.position - offset;
      next.push_back(child);
    }
    out.swap(next);
  }
  return out;
}

namespace {

enum class Action : uint8_t { kKeep, kPrune, kClone, kBaselineSplit, kHngdSplit };

}  // namespace

DensifyReport densify_step(GaussianCloud& cloud,
                           const std::vector<double>& screen_grads,
                           const DensifyConfig& cfg, DensifyState& state,
                           std::vector<int32_t>* parent_of) {
  const size_t n = cloud.size();
  if (screen_grads.size() != n) {
    throw std::invalid_argument("densify_step: screen_grads size mismatch");
  }
  state.accum_grad.resize(n, 0.0);

  // Sample the fused gradient field at each Gaussian's containing voxel and
  // add it to the running accumulator.
  if (!cloud.gaussians.empty()) {
    const DensityGrid grid = rasterize_density(cloud, cfg.grid_resolution);
    const FusedGradientField field = build_fused_gradient_field(grid, cfg.omega);
    for (size_t i = 0; i < n; ++i) {
      const Eigen::Vector3i v = grid.containing_voxel(cloud.gaussians[i].position);
      state.accum_grad[i] += field.fused[field.index(v[0], v[1], v[2])];
    }
  }

  cloud.update_bbox();
  const double diag = cloud.bbox.empty() ? 0.0 : cloud.bbox.extent().norm();
  const double size_split_threshold = cfg.percent_dense * diag;

  DensifyReport report;
  std::vector<Action> actions(n, Action::kKeep);
  std::vector<int> levels(n, 0);
  int64_t projected = 0;
  for (size_t i = 0; i < n; ++i) {
    const Gaussian3D& g = cloud.gaussians[i];
    if (g.opacity() < cfg.prune_opacity) {
      actions[i] = Action::kPrune;
      continue;
    }
    const int level = assign_level(state.accum_grad[i], cfg);
    if (level >= 1) {
      actions[i] = Action::kHngdSplit;
      levels[i] = std::min(level, cfg.split_level_cap);
      projected += int64_t(1) << levels[i];
      continue;
    }
    if (screen_grads[i] >= cfg.clone_grad_threshold) {
      if (g.scales().maxCoeff() > size_split_threshold) {
        actions[i] = Action::kBaselineSplit;
        projected += 2;
      } else {
        actions[i] = Action::kClone;
        projected += 2;
      }
      continue;
    }
    projected += 1;
  }

  // Budget: drop the highest hierarchy levels first, then surplus baseline
  // growth in reverse index order.
  while (projected > cfg.max_gaussians) {
    int best = -1;
    int best_level = 0;
    for (size_t i = 0; i < n; ++i) {
      if (actions[i] == Action::kHngdSplit && levels[i] > best_level) {
        best_level = levels[i];
        best = int(i);
      }
    }
    if (best >= 0) {
      report.budget_truncated = true;
      projected -= int64_t(1) << levels[best];
      levels[best] -= 1;
      if (levels[best] == 0) {
        actions[best] = Action::kKeep;
        projected += 1;
      } else {
        projected += int64_t(1) << levels[best];
      }
      continue;
    }
    bool dropped = false;
    for (size_t i = n; i-- > 0;) {
      if (actions[i] == Action::kClone || actions[i] == Action::kBaselineSplit) {
        actions[i] = Action::kKeep;
        projected -= 1;
        report.budget_truncated = true;
        dropped = true;
        break;
      }
    }
    if (!dropped) break;  // nothing left to shed
  }

  std::vector<Gaussian3D> next;
  std::vector<double> next_accum;
  std::vector<int32_t> parents;
  next.reserve(size_t(projected));
  next_accum.reserve(size_t(projected));
  parents.reserve(size_t(projected));

  auto emit = [&](const Gaussian3D& g, double accum, int32_t parent) {
    next.push_back(g);
    next_accum.push_back(accum);
    parents.push_back(parent);
  };

  for (size_t i = 0; i < n; ++i) {
    const Gaussian3D& g = cloud.gaussians[i];
    switch (actions[i]) {
      case Action::kPrune:
        report.pruned += 1;
        break;
      case Action::kKeep:
        emit(g, state.accum_grad[i], int32_t(i));
        break;
      case Action::kClone:
        report.clones += 1;
        emit(g, state.accum_grad[i], int32_t(i));
        emit(g, 0.0, -1);
        break;
      case Action::kBaselineSplit: {
        report.baseline_splits += 1;
        for (const auto& child : split_gaussian(g, 1, cfg.split_level_cap)) {
          emit(child, 0.0, -1);
        }
        break;
      }
      case Action::kHngdSplit: {
        report.hngd_split_gaussians += 1;
        report.hngd_level_counts[levels[i]] += 1;
        for (const auto& child : split_gaussian(g, levels[i], cfg.split_level_cap)) {
          emit(child, 0.0, -1);
        }
        break;
      }
    }
  }

  cloud.gaussians = std::move(next);
  cloud.update_bbox();
  state.accum_grad = std::move(next_accum);
  report.final_count = cloud.size();
  if (parent_of) *parent_of = std::move(parents);
  return report;
}

}  // namespace splat
