#pragma once

#include <string>
#include <vector>

#include "splat/camera.hpp"

namespace splat {

// Flat little-endian float32 checkpoint with a version header and a JSON
// config echo. load(save(x)) is bit-exact for clouds whose values are
// float32-representable (anything previously loaded is).
void save_checkpoint(const GaussianCloud& cloud, const std::string& path,
                     const std::string& config_echo = "{}");

struct CheckpointData {
  GaussianCloud cloud;
  std::string config_echo;
};

CheckpointData load_checkpoint(const std::string& path);

// Point file: text lines "x y z [r g b]" (blank lines and '#' comments
// allowed), or binary (.bin): u32 count, u32 has_color, then f32 records.
// Each point becomes a Gaussian with isotropic scale set from the mean
// distance to its 3 nearest neighbors.
GaussianCloud load_points(const std::string& path);

struct CameraRecord {
  Camera camera;
  std::string image_path;  // empty when the view carries no ground truth
};

// Line-oriented camera list:
//   view <width> <height> <fx> <fy> <cx> <cy> <near> <far>
//   pose <r00 r01 r02 tx r10 r11 r12 ty r20 r21 r22 tz>
//   image <path>            (optional)
// Rotations are re-orthonormalized when drift is below 1e-3, rejected
// otherwise. Image paths resolve relative to the camera file.
std::vector<CameraRecord> load_cameras(const std::string& path);
void save_cameras(const std::vector<CameraRecord>& cams, const std::string& path);

}  // namespace splat
