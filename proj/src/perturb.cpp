#include "tmla/perturb.hpp"

#include <cmath>
#include <stdexcept>

#include "tmla/parallel.hpp"

namespace tmla {

namespace {

double sgn_plus(double w) { return w < 0.0 ? -1.0 : 1.0; }

void require_same_plane(const Plane& a, const Plane& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": plane shape mismatch");
}

}  // namespace

std::size_t NoisePyramid::element_count() const {
  std::size_t n = 0;
  for_each_plane([&](const Plane& p, int) { n += p.size(); });
  return n;
}

std::vector<double> budget_schedule(double delta, double alpha, int levels) {
  if (delta <= 0.0) throw std::invalid_argument("budget_schedule: delta must be > 0");
  if (alpha <= 0.0) throw std::invalid_argument("budget_schedule: alpha must be > 0");
  if (levels < 1) throw std::invalid_argument("budget_schedule: levels must be >= 1");
  std::vector<double> d(static_cast<std::size_t>(levels) + 1);
  for (int k = 1; k <= levels + 1; ++k)
    d[static_cast<std::size_t>(k - 1)] = std::pow(alpha, levels - k) * delta;
  return d;
}

NoisePyramid make_noise_like(const WaveletPyramid& pyr, std::vector<double> bounds) {
  if (static_cast<int>(bounds.size()) != pyr.levels + 1)
    throw std::invalid_argument("make_noise_like: need levels+1 bounds");
  NoisePyramid n;
  n.levels = pyr.levels;
  n.bounds = std::move(bounds);
  n.ch.resize(pyr.ch.size());
  for (std::size_t c = 0; c < pyr.ch.size(); ++c) {
    const ChannelPyramid& src = pyr.ch[c];
    ChannelPyramid& dst = n.ch[c];
    dst.approx = Plane(src.approx.rows, src.approx.cols);
    dst.detail.resize(src.detail.size());
    for (std::size_t k = 0; k < src.detail.size(); ++k) {
      dst.detail[k].lh = Plane(src.detail[k].lh.rows, src.detail[k].lh.cols);
      dst.detail[k].hl = Plane(src.detail[k].hl.rows, src.detail[k].hl.cols);
      dst.detail[k].hh = Plane(src.detail[k].hh.rows, src.detail[k].hh.cols);
    }
  }
  return n;
}

void fill_gaussian(NoisePyramid& n, Rng& rng, double scale) {
  n.for_each_plane([&](Plane& p, int k) {
    const double sd = scale * n.bounds[static_cast<std::size_t>(k - 1)];
    for (double& v : p.v) v = sd * rng.normal();
  });
}

void clip_noise(NoisePyramid& n) {
  n.for_each_plane([&](Plane& p, int k) {
    const double d = n.bounds[static_cast<std::size_t>(k - 1)];
    par::for_n(static_cast<long long>(p.size()), [&](long long i) {
      double v = p.v[static_cast<std::size_t>(i)];
      p.v[static_cast<std::size_t>(i)] = v < -d ? -d : (v > d ? d : v);
    });
  });
}

double log_exp_scalar(double w, double n) {
  if (n == 0.0) return w;  // identity holds bit-for-bit, not just to rounding
  const double arg = std::exp(std::abs(w)) + n;
  if (arg <= 0.0)
    throw std::domain_error("log_exp_apply: exp(|w|)+n not positive (noise out of contract)");
  return sgn_plus(w) * std::log(arg);
}

double log_exp_vjp_scalar(double w, double n, double cotangent) {
  const double arg = std::exp(std::abs(w)) + n;
  if (arg <= 0.0)
    throw std::domain_error("log_exp_vjp: exp(|w|)+n not positive (noise out of contract)");
  return cotangent * sgn_plus(w) / arg;
}

double first_order_scalar(double w, double n) {
  return w + sgn_plus(w) * n * std::exp(-std::abs(w));
}

void log_exp_apply(const Plane& w, const Plane& n, Plane& out) {
  require_same_plane(w, n, "log_exp_apply");
  out = Plane(w.rows, w.cols);
  par::for_n(static_cast<long long>(w.size()), [&](long long i) {
    out.v[static_cast<std::size_t>(i)] =
        log_exp_scalar(w.v[static_cast<std::size_t>(i)], n.v[static_cast<std::size_t>(i)]);
  });
}

void log_exp_vjp(const Plane& w, const Plane& n, const Plane& cotangent, Plane& out) {
  require_same_plane(w, n, "log_exp_vjp");
  require_same_plane(w, cotangent, "log_exp_vjp");
  out = Plane(w.rows, w.cols);
  par::for_n(static_cast<long long>(w.size()), [&](long long i) {
    const std::size_t j = static_cast<std::size_t>(i);
    out.v[j] = log_exp_vjp_scalar(w.v[j], n.v[j], cotangent.v[j]);
  });
}

void first_order_approx(const Plane& w, const Plane& n, Plane& out) {
  require_same_plane(w, n, "first_order_approx");
  out = Plane(w.rows, w.cols);
  for (std::size_t i = 0; i < w.size(); ++i) out.v[i] = first_order_scalar(w.v[i], n.v[i]);
}

WaveletPyramid log_exp_apply(const WaveletPyramid& w, const NoisePyramid& n) {
  WaveletPyramid out = w;
  if (w.levels != n.levels || w.ch.size() != n.ch.size())
    throw std::invalid_argument("log_exp_apply: pyramid/noise structure mismatch");
  for (std::size_t c = 0; c < w.ch.size(); ++c) {
    for (int k = 1; k <= w.levels; ++k) {
      const DetailBand& wd = w.ch[c].detail[static_cast<std::size_t>(k - 1)];
      const DetailBand& nd = n.ch[c].detail[static_cast<std::size_t>(k - 1)];
      DetailBand& od = out.ch[c].detail[static_cast<std::size_t>(k - 1)];
      log_exp_apply(wd.lh, nd.lh, od.lh);
      log_exp_apply(wd.hl, nd.hl, od.hl);
      log_exp_apply(wd.hh, nd.hh, od.hh);
    }
    log_exp_apply(w.ch[c].approx, n.ch[c].approx, out.ch[c].approx);
  }
  return out;
}

NoisePyramid log_exp_vjp(const WaveletPyramid& w, const NoisePyramid& n,
                         const WaveletPyramid& cotangent) {
  NoisePyramid out = n;
  for (std::size_t c = 0; c < w.ch.size(); ++c) {
    for (int k = 1; k <= w.levels; ++k) {
      const DetailBand& wd = w.ch[c].detail[static_cast<std::size_t>(k - 1)];
      const DetailBand& nd = n.ch[c].detail[static_cast<std::size_t>(k - 1)];
      const DetailBand& cd = cotangent.ch[c].detail[static_cast<std::size_t>(k - 1)];
      DetailBand& od = out.ch[c].detail[static_cast<std::size_t>(k - 1)];
      log_exp_vjp(wd.lh, nd.lh, cd.lh, od.lh);
      log_exp_vjp(wd.hl, nd.hl, cd.hl, od.hl);
      log_exp_vjp(wd.hh, nd.hh, cd.hh, od.hh);
    }
    log_exp_vjp(w.ch[c].approx, n.ch[c].approx, cotangent.ch[c].approx, out.ch[c].approx);
  }
  return out;
}

}  // namespace tmla
