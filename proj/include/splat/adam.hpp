#pragma once

#include "splat/backward.hpp"

namespace splat {

struct TrainConfig {
  int iterations = 2000;
  double loss_lambda = 0.2;
  // Per-attribute learning rates (3DGS-style defaults). The position rate
  // decays exponentially to lr_position_final over `iterations`.
  double lr_position = 1.6e-4;
  double lr_position_final = 1.6e-6;
  double lr_sh = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;
  double lr_specular = 5e-3;
  double lr_lighting = 5e-3;
  int densify_from = 500;
  int densify_until = 15000;
  uint64_t seed = 0;
};

// Bias-corrected first/second moment state. Shapes mirror the cloud; the
// GradientBundle container is reused as storage.
struct AdamState {
  GradientBundle m;
  GradientBundle v;
  int64_t step_count = 0;

  void resize(size_t n) {
    m.resize(n);
    v.resize(n);
  }
  // Rebuild state after densification: parent_of[i] is the old index whose
  // moments the new Gaussian i inherits, or -1 to start fresh.
  void remap(const std::vector<int32_t>& parent_of);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-15;

// One adaptive update over every trainable parameter. Renormalizes
// quaternions and projects visibility / light radiance back to their valid
// ranges afterwards. Throws on a non-finite gradient, naming the parameter.
void adam_step(GaussianCloud& cloud, const GradientBundle& grads,
               AdamState& state, const TrainConfig& cfg);

}  // namespace splat
