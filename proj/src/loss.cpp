#include "splat/loss.hpp"

#include <cmath>

namespace splat {

namespace {

void check_shapes(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("loss: image dimensions do not match");
  }
}

}  // namespace

double loss(const Image& rendered, const Image& gt, double lambda) {
  check_shapes(rendered, gt);
  double l1 = 0.0;
  for (size_t i = 0; i < rendered.data.size(); ++i) {
    l1 += std::abs(rendered.data[i] - gt.data[i]);
  }
  l1 /= double(rendered.data.size());
  const double s = lambda > 0.0 ? ssim(rendered, gt) : 0.0;
  return (1.0 - lambda) * l1 + lambda * (1.0 - s);
}

LossGrad loss_with_gradient(const Image& rendered, const Image& gt,
                            double lambda) {
  check_shapes(rendered, gt);
  LossGrad out;
  out.grad = Image(rendered.width, rendered.height);

  double l1 = 0.0;
  const double n = double(rendered.data.size());
  for (size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = rendered.data[i] - gt.data[i];
    l1 += std::abs(d);
    out.grad.data[i] = (1.0 - lambda) * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
  }
  l1 /= n;

  double s = 0.0;
  if (lambda > 0.0) {
    SsimGrad sg = ssim_with_gradient(rendered, gt);
    s = sg.value;
    for (size_t i = 0; i < rendered.data.size(); ++i) {
      out.grad.data[i] -= lambda * sg.grad.data[i];
    }
  }
  out.value = (1.0 - lambda) * l1 + lambda * (1.0 - s);
  return out;
}

}  // namespace splat
