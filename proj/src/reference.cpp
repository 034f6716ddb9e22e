#include "tmla/reference.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace tmla::ref {

HaarBands haar_level(const Plane& in) {
  if (in.rows % 2 != 0 || in.cols % 2 != 0)
    throw std::invalid_argument("ref::haar_level: even dimensions only");
  const int hr = in.rows / 2, hc = in.cols / 2;
  HaarBands b{Plane(hr, hc), Plane(hr, hc), Plane(hr, hc), Plane(hr, hc)};
  for (int i = 0; i < hr; ++i)
    for (int j = 0; j < hc; ++j) {
      const double a = in.at(2 * i, 2 * j);
      const double bb = in.at(2 * i, 2 * j + 1);
      const double c = in.at(2 * i + 1, 2 * j);
      const double d = in.at(2 * i + 1, 2 * j + 1);
      b.ll.at(i, j) = 0.5 * (a + bb + c + d);
      b.lh.at(i, j) = 0.5 * (a - bb + c - d);
      b.hl.at(i, j) = 0.5 * (a + bb - c - d);
      b.hh.at(i, j) = 0.5 * (a - bb - c + d);
    }
  return b;
}

Plane haar_level_inverse(const HaarBands& b) {
  const int hr = b.ll.rows, hc = b.ll.cols;
  Plane out(2 * hr, 2 * hc);
  for (int i = 0; i < hr; ++i)
    for (int j = 0; j < hc; ++j) {
      const double ll = b.ll.at(i, j), lh = b.lh.at(i, j);
      const double hl = b.hl.at(i, j), hh = b.hh.at(i, j);
      out.at(2 * i, 2 * j) = 0.5 * (ll + lh + hl + hh);
      out.at(2 * i, 2 * j + 1) = 0.5 * (ll - lh + hl - hh);
      out.at(2 * i + 1, 2 * j) = 0.5 * (ll + lh - hl - hh);
      out.at(2 * i + 1, 2 * j + 1) = 0.5 * (ll - lh - hl + hh);
    }
  return out;
}

EntropyMap local_entropy_map(const Image& img, int radius) {
  if (radius < 1) throw std::invalid_argument("ref::local_entropy_map: radius must be >= 1");
  const Image gray = to_grayscale(img);
  const int H = gray.height, W = gray.width, r = radius;

  std::vector<int> levels(static_cast<std::size_t>(H) * W);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    long q = std::lround(gray.data[i] * 255.0);
    if (q < 0) q = 0;
    if (q > 255) q = 255;
    levels[i] = static_cast<int>(q);
  }

  EntropyMap em;
  em.radius = radius;
  em.map = Plane(H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      int hist[256] = {0};
      int population = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= H) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= W) continue;
          if (dx * dx + dy * dy > r * r) continue;
          ++hist[levels[static_cast<std::size_t>(yy) * W + xx]];
          ++population;
        }
      }
      double e = 0.0;
      const double n = static_cast<double>(population);
      for (int b = 0; b < 256; ++b) {
        if (hist[b] == 0) continue;
        const double p = hist[b] / n;
        e -= p * std::log2(p);
      }
      em.map.at(y, x) = e / 8.0;
    }
  }
  double s = 0.0;
  for (double v : em.map.v) s += v;
  em.mean = s / static_cast<double>(em.map.size());
  return em;
}

namespace {

void dct_1d(const std::vector<double>& basis, int n, const double* in, double* out, bool inverse) {
  for (int u = 0; u < n; ++u) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += (inverse ? basis[static_cast<std::size_t>(i) * n + u]
                    : basis[static_cast<std::size_t>(u) * n + i]) *
           in[i];
    out[u] = s;
  }
}

}  // namespace

std::pair<Image, double> surrogate_forward(const Image& x, const SurrogateCodecParams& p) {
  p.validate();
  const int bs = p.block;
  const int ph = (x.height + bs - 1) / bs * bs;
  const int pw = (x.width + bs - 1) / bs * bs;

  std::vector<double> basis(static_cast<std::size_t>(bs) * bs);
  const double pi = 3.14159265358979323846264338327950288;
  for (int u = 0; u < bs; ++u) {
    const double cu = u == 0 ? std::sqrt(1.0 / bs) : std::sqrt(2.0 / bs);
    for (int i = 0; i < bs; ++i)
      basis[static_cast<std::size_t>(u) * bs + i] = cu * std::cos((2 * i + 1) * u * pi / (2.0 * bs));
  }

  int nhf = 0;
  for (int u = 0; u < bs; ++u)
    for (int v = 0; v < bs; ++v)
      if (u + v >= bs) ++nhf;

  Image recon(x.height, x.width, x.channels);
  std::map<long long, long long> hist;
  long long total_symbols = 0;

  std::vector<double> blk(static_cast<std::size_t>(bs) * bs), tmp(blk.size()), y(blk.size()),
      yq(blk.size()), rec(blk.size());

  for (int c = 0; c < x.channels; ++c)
    for (int by = 0; by < ph / bs; ++by)
      for (int bx = 0; bx < pw / bs; ++bx) {
        for (int i = 0; i < bs; ++i)
          for (int j = 0; j < bs; ++j) {
            const int yy = std::min(by * bs + i, x.height - 1);
            const int xx = std::min(bx * bs + j, x.width - 1);
            blk[static_cast<std::size_t>(i) * bs + j] = x.at(c, yy, xx);
          }

        // rows then columns
        for (int i = 0; i < bs; ++i) dct_1d(basis, bs, &blk[static_cast<std::size_t>(i) * bs], &tmp[static_cast<std::size_t>(i) * bs], false);
        for (int j = 0; j < bs; ++j) {
          std::vector<double> col(static_cast<std::size_t>(bs)), out(static_cast<std::size_t>(bs));
          for (int i = 0; i < bs; ++i) col[static_cast<std::size_t>(i)] = tmp[static_cast<std::size_t>(i) * bs + j];
          dct_1d(basis, bs, col.data(), out.data(), false);
          for (int i = 0; i < bs; ++i) y[static_cast<std::size_t>(i) * bs + j] = out[static_cast<std::size_t>(i)];
        }

        double act = 0.0;
        for (int u = 0; u < bs; ++u)
          for (int v = 0; v < bs; ++v)
            if (u + v >= bs) act += std::abs(y[static_cast<std::size_t>(u) * bs + v]);
        act /= nhf;
        const double g = 1.0 / (1.0 + std::exp(-p.sharpness * (act - p.tau)));
        const double q = p.q_fine + g * (p.q_coarse - p.q_fine);

        for (std::size_t i = 0; i < y.size(); ++i) {
          const double z = y[i] / q;
          yq[i] = q * softround(z);
          ++hist[std::llround(z)];
          ++total_symbols;
        }

        for (int j = 0; j < bs; ++j) {
          std::vector<double> col(static_cast<std::size_t>(bs)), out(static_cast<std::size_t>(bs));
          for (int i = 0; i < bs; ++i) col[static_cast<std::size_t>(i)] = yq[static_cast<std::size_t>(i) * bs + j];
          dct_1d(basis, bs, col.data(), out.data(), true);
          for (int i = 0; i < bs; ++i) tmp[static_cast<std::size_t>(i) * bs + j] = out[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < bs; ++i) dct_1d(basis, bs, &tmp[static_cast<std::size_t>(i) * bs], &rec[static_cast<std::size_t>(i) * bs], true);

        for (int i = 0; i < bs; ++i)
          for (int j = 0; j < bs; ++j) {
            const int yy = by * bs + i, xx = bx * bs + j;
            if (yy >= x.height || xx >= x.width) continue;
            double v = rec[static_cast<std::size_t>(i) * bs + j];
            recon.at(c, yy, xx) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
          }
      }

  double entropy = 0.0;
  for (const auto& [sym, count] : hist) {
    const double prob = static_cast<double>(count) / static_cast<double>(total_symbols);
    entropy -= prob * std::log2(prob);
  }
  const double bpp = entropy * static_cast<double>(total_symbols) /
                     (static_cast<double>(ph) * static_cast<double>(pw));
  return {std::move(recon), bpp};
}

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "ref::mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

}  // namespace tmla::ref
