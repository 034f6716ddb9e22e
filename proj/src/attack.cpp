#include "tmla/attack.hpp"

#include <cmath>
#include <stdexcept>

#include "tmla/optim.hpp"
#include "tmla/parallel.hpp"
#include "tmla/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tmla {

namespace {

// Serialize noise planes into the flat parameter vector Adam operates on
// (canonical for_each_plane order).
std::vector<double> flatten(const NoisePyramid& n) {
  std::vector<double> out;
  out.reserve(n.element_count());
  n.for_each_plane([&](const Plane& p, int) { out.insert(out.end(), p.v.begin(), p.v.end()); });
  return out;
}

void unflatten(const std::vector<double>& flat, NoisePyramid& n) {
  std::size_t at = 0;
  n.for_each_plane([&](Plane& p, int) {
    std::copy(flat.begin() + static_cast<long>(at), flat.begin() + static_cast<long>(at + p.size()),
              p.v.begin());
    at += p.size();
  });
}

MetricReport report_against(const Image& reference, const Image& img) {
  return metric_report(reference, img);
}

void check_finite(double loss) {
  if (!std::isfinite(loss)) throw std::runtime_error("attack: non-finite loss, aborting");
}

}  // namespace

std::string to_string(AttackMode m) {
  switch (m) {
    case AttackMode::tmla: return "tmla";
    case AttackMode::pgd: return "pgd";
    case AttackMode::pixel_logexp: return "pixel-logexp";
  }
  return "?";
}

AttackMode attack_mode_from_string(const std::string& s) {
  if (s == "tmla") return AttackMode::tmla;
  if (s == "pgd") return AttackMode::pgd;
  if (s == "pixel-logexp" || s == "pixel_logexp") return AttackMode::pixel_logexp;
  throw std::invalid_argument("unknown attack mode '" + s + "'");
}

void AttackConfig::validate() const {
  if (levels < 1) throw std::invalid_argument("attack config: levels must be >= 1");
  if (alpha <= 0.0) throw std::invalid_argument("attack config: alpha must be > 0");
  if (mode == AttackMode::pgd) {
    if (delta < 0.0) throw std::invalid_argument("attack config: pgd delta must be >= 0");
  } else if (mode == AttackMode::pixel_logexp) {
    if (delta <= 0.0 || delta >= 1.0)
      throw std::invalid_argument("attack config: pixel-logexp needs 0 < delta < 1");
  } else {
    if (delta <= 0.0) throw std::invalid_argument("attack config: delta must be > 0");
    if (delta * std::pow(alpha, levels - 1) >= 1.0)
      throw std::invalid_argument("attack config: delta*alpha^(S-1) must stay below 1 "
                                  "(log-exp argument positivity)");
  }
  if (eta <= 0.0) throw std::invalid_argument("attack config: eta must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("attack config: lambda must be >= 0");
  if (max_iters < 1) throw std::invalid_argument("attack config: max_iters must be >= 1");
  if (tol_in <= 0.0 || tol_out <= 0.0)
    throw std::invalid_argument("attack config: tolerances must be > 0");
  if (init_noise_scale < 0.0)
    throw std::invalid_argument("attack config: init_noise_scale must be >= 0");
  FilterSpec::preset(filter);  // throws on unknown name
}

AttackResult run_tmla(const Image& x, const CodecContract& codec, const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.mode != AttackMode::tmla) throw std::invalid_argument("run_tmla: cfg.mode != tmla");

  const FilterSpec& spec = FilterSpec::preset(cfg.filter);
  const WaveletPyramid coeffs = dwt2(x, spec, cfg.levels);

  NoisePyramid noise = make_noise_like(coeffs, budget_schedule(cfg.delta, cfg.alpha, cfg.levels));
  Rng rng(cfg.seed);
  fill_gaussian(noise, rng, cfg.init_noise_scale);

  TmlaObjective obj{cfg.q_in, cfg.q_out, cfg.lambda, 1.0, 1.0};
  AdamState adam(noise.element_count(), AdamParams{0.9, 0.999, 1e-8, cfg.eta});

  AttackResult res;
  double best_loss = 0.0;
  bool have_best = false;
  NoisePyramid best_noise = noise;
  Image best_x_adv, best_x_hat;
  double best_bpp = 0.0;

  std::vector<double> params, grads;
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    clip_noise(noise);  // budget projection at the top of every pass

    TmlaEval ev = tmla_forward_backward(x, coeffs, noise, codec, obj, /*want_grad=*/true);
    check_finite(ev.loss.total);
    res.loss_trace.push_back(ev.loss.total);
    res.stealth_trace.push_back(ev.psnr_in);
    res.success_trace.push_back(ev.psnr_out);
    res.final_stealth_psnr = ev.psnr_in;
    res.final_success_psnr = ev.psnr_out;

    if (!have_best || ev.loss.total < best_loss) {
      have_best = true;
      best_loss = ev.loss.total;
      best_noise = noise;
      best_x_adv = ev.x_adv;
      best_x_hat = ev.x_hat_adv;
      best_bpp = ev.bpp;
    }

    if (std::abs(ev.psnr_in - cfg.q_in) <= cfg.tol_in &&
        std::abs(ev.psnr_out - cfg.q_out) <= cfg.tol_out) {
      res.converged = true;
      ++iter;
      break;
    }

    params = flatten(noise);
    grads = flatten(ev.grad);
    if (cfg.use_adam) {
      adam.step(params.data(), grads.data(), params.size());
    } else {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.eta * grads[i];
    }
    unflatten(params, noise);
  }

  res.iterations = iter;
  res.x_adv = std::move(best_x_adv);
  res.x_hat_adv = std::move(best_x_hat);
  res.noise = std::move(best_noise);
  res.bpp = best_bpp;
  res.stealth = report_against(x, res.x_adv);
  res.success = report_against(x, res.x_hat_adv);
  return res;
}

AttackResult run_pgd(const Image& x, const CodecContract& codec, const AttackConfig& cfg) {
  if (cfg.mode != AttackMode::pgd) throw std::invalid_argument("run_pgd: cfg.mode != pgd");
  if (cfg.delta < 0.0) throw std::invalid_argument("pgd: delta must be >= 0");
  if (!codec.vjp) throw std::invalid_argument("pgd requires a codec with a vjp");

  const double step = cfg.delta / 10.0;
  Image x_adv = x;

  AttackResult res;
  for (int it = 0; it < cfg.pgd_iters; ++it) {
    auto [x_hat, bpp] = codec.forward(x_adv);
    const double p = psnr(x_hat, x);
    res.loss_trace.push_back(-p);  // PGD maximizes degradation
    res.stealth_trace.push_back(psnr(x_adv, x));
    res.success_trace.push_back(p);
    check_finite(p);

    if (cfg.delta == 0.0) break;

    // ascend on distortion: d(-PSNR)/dx_adv through the codec
    const Image cot_hat = psnr_vjp(x_hat, x, -1.0);
    const Image g = codec.vjp(x_adv, cot_hat);

    par::for_n(static_cast<long long>(x_adv.size()), [&](long long ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      const double s = g.data[i] > 0.0 ? 1.0 : (g.data[i] < 0.0 ? -1.0 : 0.0);
      double v = x_adv.data[i] + step * s;
      // project onto the l-inf ball around x, then onto [0,1]
      const double lo = x.data[i] - cfg.delta, hi = x.data[i] + cfg.delta;
      if (v < lo) v = lo;
      if (v > hi) v = hi;
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      x_adv.data[i] = v;
    });
    res.iterations = it + 1;
  }

  auto [x_hat, bpp] = codec.forward(x_adv);
  res.x_adv = x_adv;
  res.x_hat_adv = std::move(x_hat);
  res.bpp = bpp;
  Image n(x.height, x.width, x.channels);
  for (std::size_t i = 0; i < n.size(); ++i) n.data[i] = x_adv.data[i] - x.data[i];
  res.pixel_noise = std::move(n);
  res.stealth = report_against(x, res.x_adv);
  res.success = report_against(x, res.x_hat_adv);
  res.final_stealth_psnr = res.stealth.psnr;
  res.final_success_psnr = res.success.psnr;
  res.converged = true;  // fixed-iteration baseline
  return res;
}

AttackResult run_pixel_logexp(const Image& x, const CodecContract& codec,
                              const AttackConfig& cfg) {
  if (cfg.mode != AttackMode::pixel_logexp)
    throw std::invalid_argument("run_pixel_logexp: cfg.mode != pixel-logexp");
  if (cfg.delta <= 0.0 || cfg.delta >= 1.0)
    throw std::invalid_argument("pixel-logexp: need 0 < delta < 1");

  // single "subband" = the image itself, budget = delta
  Image noise(x.height, x.width, x.channels);
  Rng rng(cfg.seed);
  for (double& v : noise.data) v = cfg.init_noise_scale * cfg.delta * rng.normal();

  TmlaObjective obj{cfg.q_in, cfg.q_out, cfg.lambda, 1.0, 1.0};
  AdamState adam(noise.size(), AdamParams{0.9, 0.999, 1e-8, cfg.eta});

  AttackResult res;
  double best_loss = 0.0;
  bool have_best = false;
  Image best_noise = noise, best_x_adv, best_x_hat;
  double best_bpp = 0.0;

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    for (double& v : noise.data) v = v < -cfg.delta ? -cfg.delta : (v > cfg.delta ? cfg.delta : v);

    PixelLogExpEval ev = pixel_logexp_forward_backward(x, noise, codec, obj, /*want_grad=*/true);
    check_finite(ev.loss.total);
    res.loss_trace.push_back(ev.loss.total);
    res.stealth_trace.push_back(ev.psnr_in);
    res.success_trace.push_back(ev.psnr_out);
    res.final_stealth_psnr = ev.psnr_in;
    res.final_success_psnr = ev.psnr_out;

    if (!have_best || ev.loss.total < best_loss) {
      have_best = true;
      best_loss = ev.loss.total;
      best_noise = noise;
      best_x_adv = ev.x_adv;
      best_x_hat = ev.x_hat_adv;
      best_bpp = ev.bpp;
    }

    if (std::abs(ev.psnr_in - cfg.q_in) <= cfg.tol_in &&
        std::abs(ev.psnr_out - cfg.q_out) <= cfg.tol_out) {
      res.converged = true;
      ++iter;
      break;
    }

    if (cfg.use_adam) {
      adam.step(noise.data.data(), ev.grad.data.data(), noise.size());
    } else {
      for (std::size_t i = 0; i < noise.size(); ++i) noise.data[i] -= cfg.eta * ev.grad.data[i];
    }
  }

  res.iterations = iter;
  res.x_adv = std::move(best_x_adv);
  res.x_hat_adv = std::move(best_x_hat);
  res.pixel_noise = std::move(best_noise);
  res.bpp = best_bpp;
  res.stealth = report_against(x, res.x_adv);
  res.success = report_against(x, res.x_hat_adv);
  return res;
}

AttackResult run_attack(const Image& x, const CodecContract& codec, const AttackConfig& cfg) {
  switch (cfg.mode) {
    case AttackMode::tmla: return run_tmla(x, codec, cfg);
    case AttackMode::pgd: return run_pgd(x, codec, cfg);
    case AttackMode::pixel_logexp: return run_pixel_logexp(x, codec, cfg);
  }
  throw std::invalid_argument("run_attack: bad mode");
}

std::vector<BatchEntry> batch_attack(const std::vector<Image>& images,
                                     const std::vector<std::string>& names,
                                     const CodecContract& codec, const AttackConfig& cfg,
                                     int jobs) {
  if (images.empty()) throw std::invalid_argument("batch_attack: empty manifest");
  if (!names.empty() && names.size() != images.size())
    throw std::invalid_argument("batch_attack: names/images length mismatch");

  std::vector<BatchEntry> out(images.size());
  const int n = static_cast<int>(images.size());

  // Per-image seeds make entries order-independent; the inner attack loops
  // stay serial per instance.
  auto run_one = [&](int i) {
    BatchEntry& e = out[static_cast<std::size_t>(i)];
    e.name = names.empty() ? "image" + std::to_string(i) : names[static_cast<std::size_t>(i)];
    AttackConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    try {
      e.result = run_attack(images[static_cast<std::size_t>(i)], codec, c);
      e.ok = true;
    } catch (const std::exception& ex) {
      e.ok = false;
      e.error = ex.what();
    }
  };

#ifdef _OPENMP
  if (jobs > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (int i = 0; i < n; ++i) run_one(i);
    return out;
  }
#else
  (void)jobs;
#endif
  for (int i = 0; i < n; ++i) run_one(i);
  return out;
}

}  // namespace tmla
