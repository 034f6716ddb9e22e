#pragma once

#include <cstdint>
#include <vector>

#include "tmla/image.hpp"

namespace tmla {

// Octave value-noise with a controllable spectral slope. roughness in [0,1]:
// low values give smooth large-scale fields (low local entropy), high values
// approach white texture. roughness ~= 0.5 lands near a 1/f^2 power spectrum.
Image synth_noise(int height, int width, int channels, std::uint64_t seed,
                  double roughness = 0.5);

// Gaussian random field with power spectral density 1/f^power, synthesized
// in the frequency domain (dimensions must be powers of two). power = 2 is
// the classic natural-image spectrum.
Image synth_spectral(int height, int width, int channels, std::uint64_t seed,
                     double power = 2.0);

// Piecewise-flat scene with soft wide bumps; low local entropy.
Image synth_smooth(int height, int width, int channels, std::uint64_t seed);

// Dense high-frequency texture; high local entropy.
Image synth_texture(int height, int width, int channels, std::uint64_t seed);

// Natural-image-like scene: smooth background with masked texture patches.
// texture_frac controls the textured area fraction; the texture contrast is
// bisected so the p92 of per-block high-frequency DCT activity equals
// activity_p92, giving scenes heterogeneous block statistics (the way
// photographs have flat and busy regions) with a repeatable energy profile.
Image synth_scene(int height, int width, int channels, std::uint64_t seed,
                  double texture_frac = 0.4, double activity_p92 = 0.0056,
                  double background_span = 0.40);

// The three-image fixture used by the end-to-end suites: scenes at three
// texture coverages.
std::vector<Image> synth_fixture_trio(int height, int width, int channels,
                                      std::uint64_t seed);

// Entropy sweep for the correlation study: `count` images whose roughness
// ramps from lo to hi.
std::vector<Image> synth_entropy_sweep(int height, int width, int channels,
                                       std::uint64_t seed, int count, double lo = 0.2,
                                       double hi = 0.95);

}  // namespace tmla
