#pragma once

#include <vector>

#include "tmla/codec.hpp"
#include "tmla/image.hpp"
#include "tmla/perturb.hpp"
#include "tmla/wavelet.hpp"

namespace tmla {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-2;
};

// Flat Adam state over a fixed-order parameter vector (bias-corrected,
// minimization convention).
struct AdamState {
  AdamParams hp;
  std::vector<double> m, v;
  long long t = 0;

  explicit AdamState(std::size_t n = 0, AdamParams p = {}) : hp(p), m(n, 0.0), v(n, 0.0) {}
  void step(double* params, const double* grads, std::size_t n);
};

// Composite attack objective:
//   L = w_out*|PSNR(x_hat_adv, x) - q_out| + w_in*|PSNR(x_adv, x) - q_in|
//       + lambda * sum_k ||N_k||_1
// Term weights exist so tests can isolate sub-chains; both default to 1.
struct TmlaObjective {
  double q_in = 55.0;
  double q_out = 25.0;
  double lambda = 1e-4;
  double w_in = 1.0;
  double w_out = 1.0;
};

struct LossTerms {
  double total = 0.0;
  double term_out = 0.0;  // |PSNR_out - q_out|
  double term_in = 0.0;   // |PSNR_in - q_in|
  double term_l1 = 0.0;   // lambda * sum |N|
};

LossTerms tmla_loss(const Image& x, const Image& x_adv, const Image& x_hat_adv,
                    const NoisePyramid& noise, const TmlaObjective& obj);

// One full forward (and optionally backward) pass of the T-MLA chain:
// log-exp apply -> iDWT -> clip -> codec -> loss, with the exact gradient
// of the loss with respect to every noise plane.
struct TmlaEval {
  Image x_adv;         // clipped adversarial image
  Image x_hat_adv;     // codec reconstruction
  double bpp = 0.0;
  double psnr_in = 0.0;
  double psnr_out = 0.0;
  LossTerms loss;
  NoisePyramid grad;   // valid when gradients were requested
};

TmlaEval tmla_forward_backward(const Image& x, const WaveletPyramid& coeffs,
                               const NoisePyramid& noise, const CodecContract& codec,
                               const TmlaObjective& obj, bool want_grad);

// Pixel-space variant (the S=0 baseline): log-exp applied directly to pixel
// values, no wavelet stage. `noise` is an image-shaped plane.
struct PixelLogExpEval {
  Image x_adv;
  Image x_hat_adv;
  double bpp = 0.0;
  double psnr_in = 0.0;
  double psnr_out = 0.0;
  LossTerms loss;
  Image grad;
};

PixelLogExpEval pixel_logexp_forward_backward(const Image& x, const Image& noise,
                                              const CodecContract& codec,
                                              const TmlaObjective& obj, bool want_grad);

}  // namespace tmla
