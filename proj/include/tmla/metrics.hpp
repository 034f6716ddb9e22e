#pragma once

#include "tmla/image.hpp"

namespace tmla {

inline constexpr double kPsnrCap = 100.0;

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double vif = 0.0;
  double mse = 0.0;
};

double mse(const Image& a, const Image& b);

// 10*log10(1/MSE), data range 1, capped at 100 dB (and 100 exactly at MSE=0).
double psnr(const Image& a, const Image& b);

// Gradient of psnr(a, b) with respect to a, scaled by the cotangent.
// Zero when the PSNR is capped (MSE == 0 or psnr >= cap) so that composite
// losses built on the capped PSNR stay exactly differentiable; `capped`
// reports that the degenerate branch was taken.
Image psnr_vjp(const Image& a, const Image& b, double cotangent, bool* capped = nullptr);

// Single-scale SSIM, 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03,
// data range 1, mean over valid window positions, channel-averaged.
double ssim(const Image& a, const Image& b);

// Pixel-domain VIF: BT.601 grayscale first, 0-255 scale, 4 scales,
// GSM noise variance sigma_n^2 = 2.
double vif(const Image& reference, const Image& distorted);

double relative_vif_drop(double stealth_vif, double attack_vif);

// psnr/ssim/vif/mse of `img` against `reference`.
MetricReport metric_report(const Image& reference, const Image& img);

}  // namespace tmla
