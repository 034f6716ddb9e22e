#pragma once

#include <vector>

#include "tmla/rng.hpp"
#include "tmla/wavelet.hpp"

namespace tmla {

// Learnable per-subband noise, shaped exactly like a companion pyramid.
// bounds[k-1] is the l-inf budget for scale k; k = levels+1 addresses the
// approximation band.
struct NoisePyramid {
  int levels = 0;
  std::vector<ChannelPyramid> ch;
  std::vector<double> bounds;

  // Planes visited channel-major, scales fine to coarse (lh, hl, hh), then
  // the approximation plane. Fixed order; the optimizer state relies on it.
  template <class F>
  void for_each_plane(F&& fn) {
    for (auto& cp : ch) {
      for (int k = 1; k <= levels; ++k) {
        DetailBand& d = cp.detail[static_cast<std::size_t>(k - 1)];
        fn(d.lh, k);
        fn(d.hl, k);
        fn(d.hh, k);
      }
      fn(cp.approx, levels + 1);
    }
  }
  template <class F>
  void for_each_plane(F&& fn) const {
    for (const auto& cp : ch) {
      for (int k = 1; k <= levels; ++k) {
        const DetailBand& d = cp.detail[static_cast<std::size_t>(k - 1)];
        fn(d.lh, k);
        fn(d.hl, k);
        fn(d.hh, k);
      }
      fn(cp.approx, levels + 1);
    }
  }

  std::size_t element_count() const;
};

// delta_k = alpha^(S-k) * delta for k = 1..S+1 (the S+1 entry, the
// approximation band, comes out as delta/alpha).
std::vector<double> budget_schedule(double delta, double alpha, int levels);

NoisePyramid make_noise_like(const WaveletPyramid& pyr, std::vector<double> bounds);

// N_k ~ Gaussian(0, scale * delta_k), deterministic stream order.
void fill_gaussian(NoisePyramid& n, Rng& rng, double scale = 1.0);

// clip every plane into [-delta_k, delta_k]
void clip_noise(NoisePyramid& n);

// p(w, n) = sgn(w) * log(exp(|w|) + n), with sgn(0) := +1.
double log_exp_scalar(double w, double n);
// d p / d n = sgn(w) / (exp(|w|) + n)
double log_exp_vjp_scalar(double w, double n, double cotangent);
// w + sgn(w) * n * exp(-|w|)
double first_order_scalar(double w, double n);

void log_exp_apply(const Plane& w, const Plane& n, Plane& out);
void log_exp_vjp(const Plane& w, const Plane& n, const Plane& cotangent, Plane& out);
void first_order_approx(const Plane& w, const Plane& n, Plane& out);

// Whole-pyramid forms used by the attack loop.
WaveletPyramid log_exp_apply(const WaveletPyramid& w, const NoisePyramid& n);
NoisePyramid log_exp_vjp(const WaveletPyramid& w, const NoisePyramid& n,
                         const WaveletPyramid& cotangent);

}  // namespace tmla
