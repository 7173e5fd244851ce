#pragma once

#include "splat/metrics.hpp"

namespace splat {

// Training loss: (1-lambda) * mean|r - gt| + lambda * (1 - ssim(r, gt)).
double loss(const Image& rendered, const Image& gt, double lambda);

struct LossGrad {
  double value = 0.0;
  Image grad;  // d(loss)/d(rendered)
};

LossGrad loss_with_gradient(const Image& rendered, const Image& gt,
                            double lambda);

}  // namespace splat
