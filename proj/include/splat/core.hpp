#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>

namespace splat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// Spherical-harmonic coefficient block: 16 basis functions x 3 channels.
inline constexpr int kShCoeffCount = 16;
using ShCoeffs = Eigen::Matrix<double, kShCoeffCount, 3>;

// Shared numeric constants. Rasterization constants follow the usual
// 3DGS training setup; the scale floor keeps covariances invertible.
inline constexpr double kScaleFloor = 1e-7;
inline constexpr double kCovDilation = 0.3;
inline constexpr double kAlphaClamp = 0.99;
inline constexpr double kAlphaSkip = 1.0 / 255.0;
inline constexpr double kTransmittanceStop = 1e-4;
inline constexpr int kTileSize = 16;
inline constexpr double kCullGuardBand = 1.3;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// Clamps into the open interval (0,1) at double resolution.
inline double open_unit(double v) {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::min(std::max(v, lo), hi);
}

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 max = Vec3::Constant(std::numeric_limits<double>::lowest());

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 extent() const { return max - min; }
  bool empty() const { return (max.array() < min.array()).any(); }
};

// Deterministic 64-bit generator (splitmix64). Hand-rolled so that scene
// generation is reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  Vec3 unit_vector() {
    // Rejection-free: z uniform in [-1,1], azimuth uniform.
    double z = uniform(-1.0, 1.0);
    double phi = uniform(0.0, 6.283185307179586);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3(r * std::cos(phi), r * std::sin(phi), z);
  }

  uint32_t index(uint32_t n) { return static_cast<uint32_t>(next_u64() % n); }

 private:
  uint64_t state_;
};

// Global worker count. 0 means "use hardware concurrency". Reads the
// SPLAT_THREADS environment variable once at startup; the CLI --threads
// flag overrides.
int thread_count();
void set_thread_count(int n);

// Runs fn(i) for i in [0, n). Work is split into contiguous blocks; the
// caller is responsible for making concurrent writes disjoint. Results must
// not depend on the partition (pure per-index work only).
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace splat
