#pragma once

#include "tmla/codec.hpp"
#include "tmla/entropy.hpp"
#include "tmla/image.hpp"
#include "tmla/wavelet.hpp"

// Plain serial implementations kept as test oracles for the OpenMP kernels
// and as baselines for tools/bench. Where an independent algorithmic route
// exists (Haar block formulas, per-pixel histogram rebuild) these use it.
namespace tmla::ref {

// Single-level Haar analysis via the direct 2x2 block formulas
// (LL=(a+b+c+d)/2 etc.), even dimensions only.
struct HaarBands {
  Plane ll, lh, hl, hh;
};
HaarBands haar_level(const Plane& in);
Plane haar_level_inverse(const HaarBands& b);

// Naive local entropy: rebuilds the disk histogram from scratch per pixel.
// Must agree bit-for-bit with tmla::local_entropy_map.
EntropyMap local_entropy_map(const Image& img, int radius);

// Serial single-threaded surrogate forward, same math as the parallel one.
std::pair<Image, double> surrogate_forward(const Image& x, const SurrogateCodecParams& p);

// Plain left-to-right mse
double mse(const Image& a, const Image& b);

}  // namespace tmla::ref
