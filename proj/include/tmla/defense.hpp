#pragma once

#include <cstdint>
#include <vector>

#include "tmla/codec.hpp"
#include "tmla/image.hpp"

namespace tmla {

enum class DefenseLoss { mse };

struct DefenseConfig {
  double delta = 0.03;  // defense noise budget; 0 makes the defense a no-op
  double eta = 30.0;    // learning rate (MSE-scale gradients are tiny)
  DefenseLoss loss = DefenseLoss::mse;
  int iters = 300;      // T
  std::uint64_t seed = 7;
  bool use_adam = false;  // plain gradient steps as printed; Adam for parity runs
  double adam_eta = 2e-3;
  double init_scale = 1.0;  // scales the Gaussian init stddev

  void validate() const;
};

struct DefenseResult {
  Image x_defended;
  Image x_hat_defended;
  Image noise;
  double objective_init = 0.0;  // MSE(f(x + clip(n0)), x)
  double objective_best = 0.0;
  int best_iter = 0;
  std::vector<double> objective_trace;
};

// Learned pixel-space counter-perturbation: descends the reconstruction
// distortion MSE(f(clip01(x + n)), x) over n with the l-inf budget projected
// at the top of every pass. x is the image the defender received (it has no
// clean original). Returns the best iterate under the objective.
DefenseResult run_defense(const Image& x_received, const CodecContract& codec,
                          const DefenseConfig& cfg);

}  // namespace tmla
