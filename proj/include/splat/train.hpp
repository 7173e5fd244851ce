#pragma once

#include "splat/adam.hpp"
#include "splat/densify.hpp"

namespace splat {

struct TrainView {
  Camera camera;
  Image gt;
};

struct IterationLog {
  int iteration = 0;
  double loss = 0.0;
  double psnr = 0.0;
  size_t gaussian_count = 0;
  int split_count = 0;  // gaussians split at this iteration (baseline + hierarchical)
};

struct TrainResult {
  std::vector<IterationLog> log;
};

// Comma-separated record, one line per iteration, full double precision.
std::string format_log_line(const IterationLog& entry);

// Round-robin training over the views (seeded epoch shuffles), with
// densification every densify_interval iterations inside the window.
// Deterministic for a fixed seed.
TrainResult train(GaussianCloud& cloud, const std::vector<TrainView>& views,
                  const TrainConfig& cfg, const DensifyConfig& densify_cfg,
                  const ShadingConfig& shading_cfg,
                  const Vec3& background = Vec3::Zero());

}  // namespace splat
