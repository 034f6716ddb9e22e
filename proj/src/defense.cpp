#include "tmla/defense.hpp"

#include <cmath>
#include <stdexcept>

#include "tmla/metrics.hpp"
#include "tmla/optim.hpp"
#include "tmla/parallel.hpp"
#include "tmla/rng.hpp"

namespace tmla {

void DefenseConfig::validate() const {
  if (delta < 0.0) throw std::invalid_argument("defense config: delta must be >= 0");
  if (iters < 1) throw std::invalid_argument("defense config: iters must be >= 1");
  if (eta <= 0.0) throw std::invalid_argument("defense config: eta must be > 0");
  if (init_scale < 0.0) throw std::invalid_argument("defense config: init_scale must be >= 0");
}

DefenseResult run_defense(const Image& x_received, const CodecContract& codec,
                          const DefenseConfig& cfg) {
  cfg.validate();
  if (!codec.vjp) throw std::invalid_argument("run_defense requires a codec with a vjp");

  const Image& x0 = x_received;

  if (cfg.delta == 0.0) {  // empty budget: pass the input through unchanged
    DefenseResult res;
    res.x_defended = x0;
    res.noise = Image(x0.height, x0.width, x0.channels);
    auto [x_hat, bpp] = codec.forward(x0);
    (void)bpp;
    res.x_hat_defended = std::move(x_hat);
    res.objective_init = res.objective_best = mse(res.x_hat_defended, x0);
    res.objective_trace.push_back(res.objective_init);
    return res;
  }

  Image noise(x0.height, x0.width, x0.channels);
  Rng rng(cfg.seed);
  for (double& v : noise.data) v = cfg.init_scale * cfg.delta * rng.normal();

  AdamState adam(noise.size(), AdamParams{0.9, 0.999, 1e-8, cfg.adam_eta});

  DefenseResult res;
  bool have_best = false;
  Image best_noise = noise;

  for (int it = 0; it < cfg.iters; ++it) {
    // budget projection, then the perturbed input
    for (double& v : noise.data) v = v < -cfg.delta ? -cfg.delta : (v > cfg.delta ? cfg.delta : v);

    Image x_raw(x0.height, x0.width, x0.channels);
    for (std::size_t i = 0; i < x_raw.size(); ++i) x_raw.data[i] = x0.data[i] + noise.data[i];
    const Image x_def = clip01(x_raw);

    auto [x_hat, bpp] = codec.forward(x_def);
    (void)bpp;
    const double obj = mse(x_hat, x0);
    if (!std::isfinite(obj)) throw std::runtime_error("defense: non-finite objective, aborting");
    res.objective_trace.push_back(obj);
    if (it == 0) res.objective_init = obj;
    if (!have_best || obj < res.objective_best) {
      have_best = true;
      res.objective_best = obj;
      res.best_iter = it;
      best_noise = noise;
    }

    // descent on distortion: d MSE(f(x_def), x0) / d n
    Image cot_hat(x0.height, x0.width, x0.channels);
    const double scale = 2.0 / static_cast<double>(x0.size());
    par::for_n(static_cast<long long>(x0.size()), [&](long long ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      cot_hat.data[i] = scale * (x_hat.data[i] - x0.data[i]);
    });
    Image g = codec.vjp(x_def, cot_hat);
    par::for_n(static_cast<long long>(g.size()), [&](long long ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      g.data[i] *= clip01_subgrad(x_raw.data[i]);
    });

    if (cfg.use_adam) {
      adam.step(noise.data.data(), g.data.data(), noise.size());
    } else {
      for (std::size_t i = 0; i < noise.size(); ++i) noise.data[i] -= cfg.eta * g.data[i];
    }
  }

  // materialize the best iterate
  for (double& v : best_noise.data)
    v = v < -cfg.delta ? -cfg.delta : (v > cfg.delta ? cfg.delta : v);
  Image x_raw(x0.height, x0.width, x0.channels);
  for (std::size_t i = 0; i < x_raw.size(); ++i) x_raw.data[i] = x0.data[i] + best_noise.data[i];
  res.x_defended = clip01(x_raw);
  auto [x_hat, bpp] = codec.forward(res.x_defended);
  (void)bpp;
  res.x_hat_defended = std::move(x_hat);
  res.noise = std::move(best_noise);
  return res;
}

}  // namespace tmla
