#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmla/codec.hpp"
#include "tmla/image.hpp"
#include "tmla/metrics.hpp"
#include "tmla/perturb.hpp"

namespace tmla {

enum class AttackMode { tmla, pgd, pixel_logexp };

std::string to_string(AttackMode m);
AttackMode attack_mode_from_string(const std::string& s);

struct AttackConfig {
  AttackMode mode = AttackMode::tmla;
  double q_in = 55.0;   // stealth PSNR target, dB
  double q_out = 25.0;  // degradation PSNR target, dB
  int levels = 3;       // wavelet depth S
  double delta = 0.03;  // global noise budget
  double alpha = 1.8;   // per-scale budget growth
  double eta = 1e-2;    // learning rate
  double lambda = 1e-4; // l1 weight
  int max_iters = 2000;
  double tol_in = 2.0;  // dB
  double tol_out = 2.0; // dB
  std::uint64_t seed = 1;
  std::string filter = "haar";
  bool use_adam = true;           // false = plain gradient steps (Alg.-literal)
  double init_noise_scale = 1.0;  // scales the Gaussian init stddev
  int pgd_iters = 200;

  void validate() const;
};

struct AttackResult {
  Image x_adv;
  Image x_hat_adv;
  std::optional<NoisePyramid> noise;  // tmla
  std::optional<Image> pixel_noise;   // pgd / pixel-logexp
  MetricReport stealth;               // (x, x_adv)
  MetricReport success;               // (x, x_hat_adv)
  double bpp = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loss_trace;
  std::vector<double> stealth_trace;  // PSNR_in per iteration
  std::vector<double> success_trace;  // PSNR_out per iteration
  // last-iterate values, reported alongside the best-loss iterate
  double final_stealth_psnr = 0.0;
  double final_success_psnr = 0.0;
};

AttackResult run_tmla(const Image& x, const CodecContract& codec, const AttackConfig& cfg);
AttackResult run_pgd(const Image& x, const CodecContract& codec, const AttackConfig& cfg);
AttackResult run_pixel_logexp(const Image& x, const CodecContract& codec, const AttackConfig& cfg);
AttackResult run_attack(const Image& x, const CodecContract& codec, const AttackConfig& cfg);

struct BatchEntry {
  std::string name;
  bool ok = false;
  std::string error;
  AttackResult result;
};

// Per-image attacks with per-image seed = cfg.seed + index; failures are
// recorded and the batch continues. `jobs` > 1 runs images in parallel;
// results are identical and ordered either way.
std::vector<BatchEntry> batch_attack(const std::vector<Image>& images,
                                     const std::vector<std::string>& names,
                                     const CodecContract& codec, const AttackConfig& cfg,
                                     int jobs = 1);

}  // namespace tmla
