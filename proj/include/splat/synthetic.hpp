#pragma once

#include "splat/train.hpp"

namespace splat {

enum class SyntheticSpec { kShell, kGrid, kMirrorLit };

// A desk-scale stand-in dataset. `generator` is the scene the ground-truth
// images were rendered from (by render_reference); `cloud` is the trainable
// initialization handed to the optimizer.
struct SyntheticScene {
  GaussianCloud cloud;
  GaussianCloud generator;
  std::vector<TrainView> views;
  ShadingConfig shading;
  Vec3 background = Vec3::Zero();
};

// Deterministic for a fixed seed.
//   SHELL      Gaussians on a sphere surface (densification tests).
//   GRID       lattice of colored Gaussians (renderer tests).
//   MIRROR_LIT plane of high-specular-weight Gaussians under an explicit
//              directional light (shading/training tests).
SyntheticScene make_synthetic(SyntheticSpec spec, uint64_t seed, int width = 64,
                              int height = 64, int n_views = 8);

// World-to-camera pose looking from eye toward target (x right, y down,
// z forward).
Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up,
                      int width, int height, double focal);

SyntheticSpec parse_synthetic_spec(const std::string& name);  // throws on junk

}  // namespace splat
