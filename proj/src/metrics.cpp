#include "splat/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace splat {

namespace {

constexpr int kWin = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

void check_same_shape(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("image dimensions do not match");
  }
}

std::array<double, kWin> gaussian_window() {
  std::array<double, kWin> w{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Valid-region separable blur of one channel. Input is H x W (channel
// extracted), output is (H-10) x (W-10) with entry (ty, tx) holding the
// weighted sum of the window whose top-left pixel is (tx, ty).
void blur_valid(const std::vector<double>& src, int w, int h,
                const std::array<double, kWin>& win, std::vector<double>& tmp,
                std::vector<double>& dst) {
  const int vw = w - kWin + 1;
  const int vh = h - kWin + 1;
  tmp.assign(size_t(vw) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int tx = 0; tx < vw; ++tx) {
      double acc = 0.0;
      for (int u = 0; u < kWin; ++u) acc += win[u] * src[size_t(y) * w + tx + u];
      tmp[size_t(y) * vw + tx] = acc;
    }
  }
  dst.assign(size_t(vw) * vh, 0.0);
  for (int ty = 0; ty < vh; ++ty) {
    for (int tx = 0; tx < vw; ++tx) {
      double acc = 0.0;
      for (int u = 0; u < kWin; ++u) acc += win[u] * tmp[size_t(ty + u) * vw + tx];
      dst[size_t(ty) * vw + tx] = acc;
    }
  }
}

// Adjoint of blur_valid: spreads a valid-region map back onto the image.
void spread_valid(const std::vector<double>& src, int w, int h,
                  const std::array<double, kWin>& win, std::vector<double>& tmp,
                  std::vector<double>& dst) {
  const int vw = w - kWin + 1;
  const int vh = h - kWin + 1;
  tmp.assign(size_t(vw) * h, 0.0);
  for (int ty = 0; ty < vh; ++ty) {
    for (int tx = 0; tx < vw; ++tx) {
      const double v = src[size_t(ty) * vw + tx];
      if (v == 0.0) continue;
      for (int u = 0; u < kWin; ++u) tmp[size_t(ty + u) * vw + tx] += win[u] * v;
    }
  }
  dst.assign(size_t(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int tx = 0; tx < vw; ++tx) {
      const double v = tmp[size_t(y) * vw + tx];
      if (v == 0.0) continue;
      for (int u = 0; u < kWin; ++u) dst[size_t(y) * w + tx + u] += win[u] * v;
    }
  }
}

void extract_channel(const Image& img, int c, std::vector<double>& out) {
  const size_t n = size_t(img.width) * img.height;
  out.resize(n);
  for (size_t i = 0; i < n; ++i) out[i] = img.data[i * 3 + c];
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same_shape(a, b);
  double sum = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  const double mse = sum / double(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  return ssim_with_gradient(a, b).value;  // gradient cost is negligible here
}

SsimGrad ssim_with_gradient(const Image& a, const Image& b) {
  check_same_shape(a, b);
  if (a.width < kWin || a.height < kWin) {
    throw std::invalid_argument("ssim: images must be at least 11x11");
  }
  const int w = a.width, h = a.height;
  const int vw = w - kWin + 1, vh = h - kWin + 1;
  const size_t nv = size_t(vw) * vh;
  const auto win = gaussian_window();

  SsimGrad out;
  out.grad = Image(w, h);

  std::vector<double> x, y, prod, tmp;
  std::vector<double> mu_x, mu_y, m_xx, m_yy, m_xy;
  std::vector<double> coef_const(nv), coef_x(nv), coef_y(nv);
  std::vector<double> spread_c, spread_x, spread_y;

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    extract_channel(a, c, x);
    extract_channel(b, c, y);

    blur_valid(x, w, h, win, tmp, mu_x);
    blur_valid(y, w, h, win, tmp, mu_y);
    prod.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) prod[i] = x[i] * x[i];
    blur_valid(prod, w, h, win, tmp, m_xx);
    for (size_t i = 0; i < x.size(); ++i) prod[i] = y[i] * y[i];
    blur_valid(prod, w, h, win, tmp, m_yy);
    for (size_t i = 0; i < x.size(); ++i) prod[i] = x[i] * y[i];
    blur_valid(prod, w, h, win, tmp, m_xy);

    double channel_sum = 0.0;
    for (size_t i = 0; i < nv; ++i) {
      const double mx = mu_x[i], my = mu_y[i];
      const double var_x = m_xx[i] - mx * mx;
      const double var_y = m_yy[i] - my * my;
      const double cov = m_xy[i] - mx * my;
      const double a1 = 2.0 * mx * my + kC1;
      const double a2 = 2.0 * cov + kC2;
      const double b1 = mx * mx + my * my + kC1;
      const double b2 = var_x + var_y + kC2;
      const double denom = b1 * b2;
      const double s = a1 * a2 / denom;
      channel_sum += s;
      // dS/dx_q = w * (coef_const + coef_x * x_q + coef_y * y_q); the parts
      // of the quotient rule independent of the probe pixel fold into
      // coef_const.
      coef_const[i] = (2.0 * my * a2 - 2.0 * a1 * my - 2.0 * s * mx * b2 +
                       2.0 * s * b1 * mx) / denom;
      coef_x[i] = -2.0 * s * b1 / denom;
      coef_y[i] = 2.0 * a1 / denom;
    }
    total += channel_sum / double(nv);

    spread_valid(coef_const, w, h, win, tmp, spread_c);
    spread_valid(coef_x, w, h, win, tmp, spread_x);
    spread_valid(coef_y, w, h, win, tmp, spread_y);
    const double scale = 1.0 / (3.0 * double(nv));
    for (size_t i = 0; i < x.size(); ++i) {
      out.grad.data[i * 3 + c] =
          scale * (spread_c[i] + spread_x[i] * x[i] + spread_y[i] * y[i]);
    }
  }
  out.value = total / 3.0;
  return out;
}

}  // namespace splat
