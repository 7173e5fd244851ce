#pragma once

#include "splat/rasterizer.hpp"

namespace splat {

// 10*log10(1/MSE) over all channels, peak 1.0. Identical images give
// +infinity. Throws on dimension mismatch.
double psnr(const Image& a, const Image& b);

// Mean local SSIM, 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03,
// dynamic range 1, channels averaged. Windows are evaluated on the valid
// region only, so images must be at least 11x11.
double ssim(const Image& a, const Image& b);

struct SsimGrad {
  double value = 0.0;
  Image grad;  // d(ssim)/d(a), same shape as the inputs
};

// SSIM plus its analytic gradient w.r.t. the first image (closed-form
// quotient rule on the windowed statistics).
SsimGrad ssim_with_gradient(const Image& a, const Image& b);

}  // namespace splat
