#include "tmla/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "tmla/metrics.hpp"
#include "tmla/parallel.hpp"

namespace tmla {

namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double noise_l1(const NoisePyramid& n) {
  double s = 0.0;
  n.for_each_plane([&](const Plane& p, int) {
    s += par::sum_indexed(p.size(), [&](std::size_t i) { return std::abs(p.v[i]); });
  });
  return s;
}

}  // namespace

void AdamState::step(double* params, const double* grads, std::size_t n) {
  if (m.size() != n) throw std::invalid_argument("AdamState: parameter count mismatch");
  ++t;
  const double b1 = hp.beta1, b2 = hp.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  const double lr = hp.lr, eps = hp.eps;
  par::for_n(static_cast<long long>(n), [&](long long ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  });
}

LossTerms tmla_loss(const Image& x, const Image& x_adv, const Image& x_hat_adv,
                    const NoisePyramid& noise, const TmlaObjective& obj) {
  LossTerms lt;
  lt.term_out = std::abs(psnr(x_hat_adv, x) - obj.q_out);
  lt.term_in = std::abs(psnr(x_adv, x) - obj.q_in);
  lt.term_l1 = obj.lambda * noise_l1(noise);
  lt.total = obj.w_out * lt.term_out + obj.w_in * lt.term_in + lt.term_l1;
  return lt;
}

TmlaEval tmla_forward_backward(const Image& x, const WaveletPyramid& coeffs,
                               const NoisePyramid& noise, const CodecContract& codec,
                               const TmlaObjective& obj, bool want_grad) {
  TmlaEval ev;

  // forward
  const WaveletPyramid perturbed = log_exp_apply(coeffs, noise);
  const Image x_adv_raw = idwt2(perturbed);
  ev.x_adv = clip01(x_adv_raw);
  auto [x_hat, bpp] = codec.forward(ev.x_adv);
  ev.x_hat_adv = std::move(x_hat);
  ev.bpp = bpp;
  ev.psnr_in = psnr(ev.x_adv, x);
  ev.psnr_out = psnr(ev.x_hat_adv, x);
  ev.loss.term_out = std::abs(ev.psnr_out - obj.q_out);
  ev.loss.term_in = std::abs(ev.psnr_in - obj.q_in);
  ev.loss.term_l1 = obj.lambda * noise_l1(noise);
  ev.loss.total = obj.w_out * ev.loss.term_out + obj.w_in * ev.loss.term_in + ev.loss.term_l1;

  if (!want_grad) return ev;
  if (!codec.vjp) throw std::invalid_argument("tmla gradient requires a codec with a vjp");

  // backward: see the chain in the forward above, run in reverse.
  // d|psnr - q| seeds (subgradient 0 exactly at the target)
  const double seed_out = obj.w_out * sign0(ev.psnr_out - obj.q_out);
  const double seed_in = obj.w_in * sign0(ev.psnr_in - obj.q_in);

  // degradation path: loss -> psnr(x_hat, x) -> codec -> x_adv
  Image cot_x_adv(x.height, x.width, x.channels);
  if (seed_out != 0.0) {
    const Image cot_hat = psnr_vjp(ev.x_hat_adv, x, seed_out);
    cot_x_adv = codec.vjp(ev.x_adv, cot_hat);
  }
  // stealth path: loss -> psnr(x_adv, x), shares the chain suffix
  if (seed_in != 0.0) {
    const Image cot_stealth = psnr_vjp(ev.x_adv, x, seed_in);
    for (std::size_t i = 0; i < cot_x_adv.size(); ++i) cot_x_adv.data[i] += cot_stealth.data[i];
  }

  // through clip to [0,1]
  par::for_n(static_cast<long long>(cot_x_adv.size()), [&](long long i) {
    cot_x_adv.data[static_cast<std::size_t>(i)] *=
        clip01_subgrad(x_adv_raw.data[static_cast<std::size_t>(i)]);
  });

  // adjoint of iDWT, then the log-exp vjp onto each noise plane
  const WaveletPyramid cot_pyr = dwt2_adjoint(cot_x_adv, coeffs.filter, coeffs.levels);
  ev.grad = log_exp_vjp(coeffs, noise, cot_pyr);

  // l1 subgradient, planes walked in lockstep canonical order
  {
    std::vector<Plane*> gplanes;
    std::vector<const Plane*> nplanes;
    ev.grad.for_each_plane([&](Plane& p, int) { gplanes.push_back(&p); });
    noise.for_each_plane([&](const Plane& p, int) { nplanes.push_back(&p); });
    for (std::size_t pi = 0; pi < gplanes.size(); ++pi) {
      Plane& g = *gplanes[pi];
      const Plane& n = *nplanes[pi];
      par::for_n(static_cast<long long>(g.size()), [&](long long i) {
        g.v[static_cast<std::size_t>(i)] += obj.lambda * sign0(n.v[static_cast<std::size_t>(i)]);
      });
    }
  }
  return ev;
}

PixelLogExpEval pixel_logexp_forward_backward(const Image& x, const Image& noise,
                                              const CodecContract& codec,
                                              const TmlaObjective& obj, bool want_grad) {
  require_same_shape(x, noise, "pixel_logexp");
  PixelLogExpEval ev;

  Image x_adv_raw(x.height, x.width, x.channels);
  par::for_n(static_cast<long long>(x.size()), [&](long long i) {
    x_adv_raw.data[static_cast<std::size_t>(i)] =
        log_exp_scalar(x.data[static_cast<std::size_t>(i)], noise.data[static_cast<std::size_t>(i)]);
  });
  ev.x_adv = clip01(x_adv_raw);
  auto [x_hat, bpp] = codec.forward(ev.x_adv);
  ev.x_hat_adv = std::move(x_hat);
  ev.bpp = bpp;
  ev.psnr_in = psnr(ev.x_adv, x);
  ev.psnr_out = psnr(ev.x_hat_adv, x);
  ev.loss.term_out = std::abs(ev.psnr_out - obj.q_out);
  ev.loss.term_in = std::abs(ev.psnr_in - obj.q_in);
  ev.loss.term_l1 = obj.lambda * par::sum_indexed(noise.size(), [&](std::size_t i) {
                      return std::abs(noise.data[i]);
                    });
  ev.loss.total = obj.w_out * ev.loss.term_out + obj.w_in * ev.loss.term_in + ev.loss.term_l1;

  if (!want_grad) return ev;
  if (!codec.vjp) throw std::invalid_argument("pixel-logexp gradient requires a codec with a vjp");

  const double seed_out = obj.w_out * sign0(ev.psnr_out - obj.q_out);
  const double seed_in = obj.w_in * sign0(ev.psnr_in - obj.q_in);

  Image cot_x_adv(x.height, x.width, x.channels);
  if (seed_out != 0.0) {
    const Image cot_hat = psnr_vjp(ev.x_hat_adv, x, seed_out);
    cot_x_adv = codec.vjp(ev.x_adv, cot_hat);
  }
  if (seed_in != 0.0) {
    const Image cot_stealth = psnr_vjp(ev.x_adv, x, seed_in);
    for (std::size_t i = 0; i < cot_x_adv.size(); ++i) cot_x_adv.data[i] += cot_stealth.data[i];
  }

  ev.grad = Image(x.height, x.width, x.channels);
  par::for_n(static_cast<long long>(x.size()), [&](long long ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double cot = cot_x_adv.data[i] * clip01_subgrad(x_adv_raw.data[i]);
    ev.grad.data[i] = log_exp_vjp_scalar(x.data[i], noise.data[i], cot) +
                      obj.lambda * sign0(noise.data[i]);
  });
  return ev;
}

}  // namespace tmla
