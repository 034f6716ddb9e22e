#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "tmla/image.hpp"

namespace tmla {

// Differentiable codec contract used by the attack/defense loops:
// forward: x -> (reconstruction, bpp); vjp: cotangent on the reconstruction
// -> gradient on the input.
struct CodecContract {
  std::function<std::pair<Image, double>(const Image&)> forward;
  std::function<Image(const Image&, const Image&)> vjp;
  std::string descriptor;
};

// Block-transform codec with an activity-gated quantizer. Blocks whose
// high-frequency activity crosses the gate threshold are quantized with the
// coarse step, so small input changes near the threshold produce large
// reconstruction changes -- the attack surface the optimization exploits.
struct SurrogateCodecParams {
  int block = 8;
  double q_fine = 0.004;
  double q_coarse = 0.22;
  double tau = 0.008;       // gate threshold on mean |HF coefficient|
  double sharpness = 1200;  // logistic gate steepness
  std::uint64_t seed = 0;   // recorded in the descriptor; no randomized parts

  void validate() const;
  std::string descriptor() const;
};

// Forward pass: per block, orthonormal 2-D DCT -> activity = mean |HF|
// -> gate g = sigma(s*(a - tau)) -> step q = q_fine + g*(q_coarse - q_fine)
// -> soft quantization q*softround(y/q) -> inverse DCT -> clip to [0,1].
// bpp is the Shannon entropy of the hard-rounded symbol histogram per pixel.
std::pair<Image, double> surrogate_forward(const Image& x, const SurrogateCodecParams& p);

// Exact vector-Jacobian product of the reconstruction path.
Image surrogate_vjp(const Image& x, const Image& cotangent, const SurrogateCodecParams& p);

CodecContract make_surrogate_codec(const SurrogateCodecParams& p);

// Metrics-only bridge to an out-of-process codec: the image goes out as a
// PNG, `command <input> <output>` runs, bpp is read as a decimal from the
// process's standard output and the reconstruction is read back as PNG.
std::pair<Image, double> external_codec_eval(const Image& x, const std::string& command,
                                             int timeout_ms = 60000);

CodecContract make_external_codec(const std::string& command, int timeout_ms = 60000);

// smooth surrogate of rounding: z - sin(2*pi*z)/(2*pi)
double softround(double z);
double softround_deriv(double z);

}  // namespace tmla
