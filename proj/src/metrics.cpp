#include "tmla/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tmla/parallel.hpp"
#include "tmla/wavelet.hpp"

namespace tmla {

namespace {

constexpr double kLn10 = 2.30258509299404568402;

std::vector<double> gaussian_kernel_1d(int n, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(n));
  const double c = (n - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    k[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable valid-mode Gaussian filtering of a plane.
Plane filter_valid(const Plane& p, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int orows = p.rows - n + 1;
  const int ocols = p.cols - n + 1;
  if (orows < 1 || ocols < 1) throw std::invalid_argument("filter_valid: image smaller than window");

  Plane tmp(p.rows, ocols);
  par::for_n(p.rows, [&](long long r) {
    for (int c = 0; c < ocols; ++c) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += k[static_cast<std::size_t>(t)] * p.at(static_cast<int>(r), c + t);
      tmp.at(static_cast<int>(r), c) = s;
    }
  });
  Plane out(orows, ocols);
  par::for_n(ocols, [&](long long c) {
    for (int r = 0; r < orows; ++r) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += k[static_cast<std::size_t>(t)] * tmp.at(r + t, static_cast<int>(c));
      out.at(r, static_cast<int>(c)) = s;
    }
  });
  return out;
}

Plane downsample2(const Plane& p) {
  Plane out(p.rows / 2, p.cols / 2);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) = p.at(2 * r, 2 * c);
  return out;
}

Plane channel_plane(const Image& img, int c) {
  Plane p(img.height, img.width);
  const double* src = img.plane(c);
  std::copy(src, src + p.size(), p.v.begin());
  return p;
}

Plane hadamard(const Plane& a, const Plane& b) {
  Plane out(a.rows, a.cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

double ssim_channel(const Plane& x, const Plane& y) {
  static const std::vector<double> win = gaussian_kernel_1d(11, 1.5);
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;

  Plane mu_x = filter_valid(x, win);
  Plane mu_y = filter_valid(y, win);
  Plane xx = filter_valid(hadamard(x, x), win);
  Plane yy = filter_valid(hadamard(y, y), win);
  Plane xy = filter_valid(hadamard(x, y), win);

  const std::size_t n = mu_x.size();
  const double total = par::sum_indexed(n, [&](std::size_t i) {
    const double mx = mu_x.v[i], my = mu_y.v[i];
    const double sx = xx.v[i] - mx * mx;
    const double sy = yy.v[i] - my * my;
    const double sxy = xy.v[i] - mx * my;
    return ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
           ((mx * mx + my * my + c1) * (sx + sy + c2));
  });
  return total / static_cast<double>(n);
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  const std::size_t n = a.size();
  const double s = par::sum_indexed(n, [&](std::size_t i) {
    const double d = a.data[i] - b.data[i];
    return d * d;
  });
  return s / static_cast<double>(n);
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m <= 0.0) return kPsnrCap;
  const double v = 10.0 * std::log10(1.0 / m);
  return v > kPsnrCap ? kPsnrCap : v;
}

Image psnr_vjp(const Image& a, const Image& b, double cotangent, bool* capped) {
  require_same_shape(a, b, "psnr_vjp");
  if (capped) *capped = false;
  Image g(a.height, a.width, a.channels);
  const double m = mse(a, b);
  if (m <= 0.0 || 10.0 * std::log10(1.0 / m) >= kPsnrCap) {  // capped: flat
    if (capped) *capped = true;
    return g;
  }
  const double ntot = static_cast<double>(a.size());
  const double scale = cotangent * (-10.0 / kLn10) * (1.0 / m) * (2.0 / ntot);
  par::for_n(static_cast<long long>(a.size()), [&](long long i) {
    g.data[static_cast<std::size_t>(i)] =
        scale * (a.data[static_cast<std::size_t>(i)] - b.data[static_cast<std::size_t>(i)]);
  });
  return g;
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c)
    total += ssim_channel(channel_plane(a, c), channel_plane(b, c));
  return total / a.channels;
}

double vif(const Image& reference, const Image& distorted) {
  require_same_shape(reference, distorted, "vif");
  const double sigma_nsq = 2.0;
  const double eps = 1e-10;

  Plane ref = channel_plane(to_grayscale(reference), 0);
  Plane dis = channel_plane(to_grayscale(distorted), 0);
  for (auto& v : ref.v) v *= 255.0;
  for (auto& v : dis.v) v *= 255.0;

  double num = 0.0, den = 0.0;
  for (int scale = 1; scale <= 4; ++scale) {
    const int n = (1 << (4 - scale + 1)) + 1;  // 17, 9, 5, 3
    const std::vector<double> win = gaussian_kernel_1d(n, n / 5.0);

    if (scale > 1) {
      ref = downsample2(filter_valid(ref, win));
      dis = downsample2(filter_valid(dis, win));
    }

    Plane mu1 = filter_valid(ref, win);
    Plane mu2 = filter_valid(dis, win);
    Plane rr = filter_valid(hadamard(ref, ref), win);
    Plane dd = filter_valid(hadamard(dis, dis), win);
    Plane rd = filter_valid(hadamard(ref, dis), win);

    for (std::size_t i = 0; i < mu1.size(); ++i) {
      double s1 = rr.v[i] - mu1.v[i] * mu1.v[i];
      double s2 = dd.v[i] - mu2.v[i] * mu2.v[i];
      double s12 = rd.v[i] - mu1.v[i] * mu2.v[i];
      if (s1 < 0.0) s1 = 0.0;
      if (s2 < 0.0) s2 = 0.0;

      double g = s12 / (s1 + eps);
      double sv = s2 - g * s12;
      if (s1 < eps) {
        g = 0.0;
        sv = s2;
        s1 = 0.0;
      }
      if (s2 < eps) {
        g = 0.0;
        sv = 0.0;
      }
      if (g < 0.0) {
        sv = s2;
        g = 0.0;
      }
      if (sv < eps) sv = eps;

      num += std::log10(1.0 + g * g * s1 / (sv + sigma_nsq));
      den += std::log10(1.0 + s1 / sigma_nsq);
    }
  }
  if (den == 0.0) return 1.0;  // flat reference carries no information
  return num / den;
}

double relative_vif_drop(double stealth_vif, double attack_vif) {
  return stealth_vif - attack_vif;
}

MetricReport metric_report(const Image& reference, const Image& img) {
  MetricReport r;
  r.mse = mse(img, reference);
  r.psnr = psnr(img, reference);
  r.ssim = ssim(img, reference);
  r.vif = vif(reference, img);
  return r;
}

}  // namespace tmla
