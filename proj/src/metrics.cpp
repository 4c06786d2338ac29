#include "hexplane/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "hexplane/core.hpp"

namespace hexplane {

namespace {

void check_shapes(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size()) {
    throw ConfigError("image shapes differ");
  }
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_shapes(a, b);
  if (a.data.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(m));
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

std::vector<double> luminance(const Image& image) {
  std::vector<double> y(image.pixels());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * image.data[3 * i] + 0.587 * image.data[3 * i + 1] + 0.114 * image.data[3 * i + 2];
  }
  return y;
}

double ssim(const Image& a, const Image& b) {
  check_shapes(a, b);
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  if (a.width < kWin || a.height < kWin) throw ConfigError("SSIM needs images of at least 11x11 pixels");
  double kernel[kWin];
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;

  const std::vector<double> x = luminance(a);
  const std::vector<double> y = luminance(b);
  const int w = a.width;
  const int h = a.height;
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  // Separable filtering: horizontal pass over the valid columns.
  const int ow = w - kWin + 1;
  const int oh = h - kWin + 1;
  std::vector<double> hx(static_cast<std::size_t>(h) * ow), hy(hx.size()), hxx(hx.size()), hyy(hx.size()),
      hxy(hx.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int k = 0; k < kWin; ++k) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c + k;
        sx += kernel[k] * x[i];
        sy += kernel[k] * y[i];
        sxx += kernel[k] * x[i] * x[i];
        syy += kernel[k] * y[i] * y[i];
        sxy += kernel[k] * x[i] * y[i];
      }
      const std::size_t o = static_cast<std::size_t>(r) * ow + c;
      hx[o] = sx;
      hy[o] = sy;
      hxx[o] = sxx;
      hyy[o] = syy;
      hxy[o] = sxy;
    }
  }
  double total = 0.0;
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
      for (int k = 0; k < kWin; ++k) {
        const std::size_t i = static_cast<std::size_t>(r + k) * ow + c;
        mx += kernel[k] * hx[i];
        my += kernel[k] * hy[i];
        exx += kernel[k] * hxx[i];
        eyy += kernel[k] * hyy[i];
        exy += kernel[k] * hxy[i];
      }
      const double vx = exx - mx * mx;
      const double vy = eyy - my * my;
      const double cov = exy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / (static_cast<double>(ow) * oh);
}

}  // namespace hexplane
