#pragma once

#include <map>

#include "splat/density_grid.hpp"

namespace splat {

enum class DensifyStrategy { kNone, kSparse, kDense };

struct DensifyConfig {
  double omega = 0.5;
  std::vector<double> thresholds = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
  DensifyStrategy strategy = DensifyStrategy::kSparse;
  int grid_resolution = 128;
  int densify_interval = 100;
  double clone_grad_threshold = 2e-4;
  double prune_opacity = 0.005;
  // Baseline clone-vs-split size boundary, as a fraction of the bbox diagonal.
  double percent_dense = 0.01;
  int max_gaussians = 200000;
  int split_level_cap = 6;
};

// Number of ladder thresholds at or below the accumulated gradient. NONE
// always maps to 0; DENSE adds one level per 0.5 above the last entry.
int assign_level(double accumulated_grad, const DensifyConfig& cfg);

// Replaces a Gaussian with 2^min(level, level_cap) children by repeatedly
// halving along the largest principal axis: offsets +-0.5 sigma_max, every
// log-scale reduced by ln(1.6), remaining attributes copied.
std::vector<Gaussian3D> split_gaussian(const Gaussian3D& g, int level,
                                       int level_cap = 6);

// Per-Gaussian fused-gradient accumulator, carried across densify calls and
// reset whenever a Gaussian is split (children start fresh).
struct DensifyState {
  std::vector<double> accum_grad;
};

struct DensifyReport {
  int clones = 0;
  int baseline_splits = 0;
  int pruned = 0;
  int hngd_split_gaussians = 0;
  std::map<int, int> hngd_level_counts;  // level -> gaussians split at it
  bool budget_truncated = false;
  size_t final_count = 0;

  int total_splits() const { return baseline_splits + hngd_split_gaussians; }
};

// One densification pass: 3DGS-style clone/split/prune driven by the
// averaged screen-space positional gradients, plus hierarchical splitting
// driven by the fused density/normal gradient sampled at each Gaussian's
// containing voxel. A Gaussian receives at most one action per pass (prune
// wins, then hierarchical split, then clone/split). When the result would
// exceed max_gaussians, the highest split levels are truncated first.
//
// parent_of, when non-null, receives the optimizer-state mapping: for each
// new index the old index it descends from, or -1 for fresh entries.
DensifyReport densify_step(GaussianCloud& cloud,
                           const std::vector<double>& screen_grads,
                           const DensifyConfig& cfg, DensifyState& state,
                           std::vector<int32_t>* parent_of = nullptr);

}  // namespace splat
