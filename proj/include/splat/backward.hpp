#pragma once

#include <string>
#include <vector>

#include "splat/loss.hpp"
#include "splat/rasterizer.hpp"

namespace splat {

// Partials of the loss for every trainable field, shapes mirroring the
// cloud. screen_grad_norm is the per-Gaussian |dL/d mean2d| used as the
// densification signal.
struct GradientBundle {
  std::vector<Vec3> position;
  std::vector<Vec3> log_scale;
  std::vector<Vec4> rotation;
  std::vector<double> opacity_logit;
  std::vector<ShCoeffs> sh_diffuse;
  std::vector<ShCoeffs> sh_specular;
  std::vector<double> specular_logit;
  std::vector<double> visibility;
  std::vector<Vec3> local_light;
  Vec3 global_light = Vec3::Zero();
  std::vector<double> screen_grad_norm;
  std::vector<uint8_t> visible;  // 1 when the Gaussian produced a splat

  void resize(size_t n);
  void set_zero();
  // Name of the first non-finite entry, or empty when all entries are finite.
  std::string first_non_finite() const;
};

struct BackwardResult {
  double loss = 0.0;
  GradientBundle grads;
  Image rendered;
};

// Analytic reverse pass through compositing, the 2D kernel, EWA projection,
// SH evaluation and the shading model. Clamped paths (alpha clamp, color
// clamp, cosine clamp) propagate zero.
BackwardResult backward(const GaussianCloud& cloud, const Camera& cam,
                        const Image& gt, const ShadingConfig& cfg,
                        double lambda, const Vec3& background = Vec3::Zero());

// Addressing of one scalar parameter, for the finite-difference oracle.
enum class ParamField {
  kPosition,
  kLogScale,
  kRotation,
  kOpacityLogit,
  kShDiffuse,
  kShSpecular,
  kSpecularLogit,
  kVisibility,
  kLocalLight,
  kGlobalLight,
};

struct ParamRef {
  ParamField field;
  int gaussian = -1;  // -1 for cloud-level fields
  int component = 0;  // ShCoeffs index: coeff * 3 + channel
};

double get_param(const GaussianCloud& cloud, const ParamRef& ref);
void set_param(GaussianCloud& cloud, const ParamRef& ref, double value);
double bundle_value(const GradientBundle& grads, const ParamRef& ref);
std::string param_name(const ParamRef& ref);
std::vector<ParamRef> enumerate_params(const GaussianCloud& cloud);

// Central difference (loss(theta+h) - loss(theta-h)) / 2h for one scalar.
double fd_gradient(const GaussianCloud& cloud, const Camera& cam,
                   const Image& gt, const ShadingConfig& cfg, double lambda,
                   const Vec3& background, const ParamRef& ref, double h);

}  // namespace splat
