#pragma once

#include "hexplane/image.hpp"

namespace hexplane {

/// Returned by psnr() when the images are identical.
inline constexpr double kPsnrCap = 99.0;

double mse(const Image& a, const Image& b);

/// 10 log10(1 / MSE), capped at kPsnrCap.
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse);

/// Luminance 0.299 R + 0.587 G + 0.114 B.
std::vector<double> luminance(const Image& image);

/// Mean SSIM of the luminance images over all valid 11x11 windows
/// (Gaussian weights, sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1).
double ssim(const Image& a, const Image& b);

}  // namespace hexplane
