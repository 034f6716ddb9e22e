#include "tmla/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tmla/rng.hpp"

namespace tmla {

namespace {

// Bilinear value noise on a (g+1)x(g+1) lattice stretched over the image.
void add_octave(Image& img, int c, Rng& rng, int grid, double amplitude) {
  std::vector<double> lattice(static_cast<std::size_t>(grid + 1) * (grid + 1));
  for (double& v : lattice) v = rng.uniform(-1.0, 1.0);

  for (int y = 0; y < img.height; ++y) {
    const double gy = static_cast<double>(y) / img.height * grid;
    const int y0 = static_cast<int>(gy);
    const double fy = gy - y0;
    for (int x = 0; x < img.width; ++x) {
      const double gx = static_cast<double>(x) / img.width * grid;
      const int x0 = static_cast<int>(gx);
      const double fx = gx - x0;
      const double v00 = lattice[static_cast<std::size_t>(y0) * (grid + 1) + x0];
      const double v01 = lattice[static_cast<std::size_t>(y0) * (grid + 1) + x0 + 1];
      const double v10 = lattice[static_cast<std::size_t>(y0 + 1) * (grid + 1) + x0];
      const double v11 = lattice[static_cast<std::size_t>(y0 + 1) * (grid + 1) + x0 + 1];
      const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
      img.at(c, y, x) += amplitude * v;
    }
  }
}

void normalize_channel(Image& img, int c, double lo, double hi) {
  double vmin = img.at(c, 0, 0), vmax = vmin;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      vmin = std::min(vmin, img.at(c, y, x));
      vmax = std::max(vmax, img.at(c, y, x));
    }
  const double span = vmax - vmin;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double t = span > 0.0 ? (img.at(c, y, x) - vmin) / span : 0.5;
      img.at(c, y, x) = lo + (hi - lo) * t;
    }
}

}  // namespace

Image synth_noise(int height, int width, int channels, std::uint64_t seed, double roughness) {
  Image img(height, width, channels, 0.0);
  Rng rng(seed);
  // Amplitude decay per octave steepens for smooth fields; local entropy is
  // slope-driven, so smooth fields also get less contrast.
  const double beta = 1.9 - 1.5 * roughness;
  const double span = 0.10 + 0.80 * roughness;
  const int max_octave = static_cast<int>(std::floor(std::log2(std::min(height, width) / 4.0)));
  for (int c = 0; c < channels; ++c) {
    for (int o = 0; o <= max_octave; ++o) {
      const int grid = 4 << o;
      if (grid >= std::min(height, width)) break;
      add_octave(img, c, rng, grid, std::pow(2.0, -beta * o));
    }
    normalize_channel(img, c, 0.5 - span / 2.0, 0.5 + span / 2.0);
  }
  return img;
}

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// radix-2 in-place FFT over rows of interleaved complex data
void fft1d(std::vector<double>& re, std::vector<double>& im, int n, bool inverse) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[static_cast<std::size_t>(i)], re[static_cast<std::size_t>(j)]);
      std::swap(im[static_cast<std::size_t>(i)], im[static_cast<std::size_t>(j)]);
    }
  }
  const double pi = 3.14159265358979323846264338327950288;
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = 2 * pi / len * (inverse ? 1 : -1);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (int i = 0; i < n; i += len) {
      double cr = 1, ci = 0;
      for (int j = 0; j < len / 2; ++j) {
        const int a = i + j, b = i + j + len / 2;
        const double xr = re[static_cast<std::size_t>(b)] * cr - im[static_cast<std::size_t>(b)] * ci;
        const double xi = re[static_cast<std::size_t>(b)] * ci + im[static_cast<std::size_t>(b)] * cr;
        re[static_cast<std::size_t>(b)] = re[static_cast<std::size_t>(a)] - xr;
        im[static_cast<std::size_t>(b)] = im[static_cast<std::size_t>(a)] - xi;
        re[static_cast<std::size_t>(a)] += xr;
        im[static_cast<std::size_t>(a)] += xi;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

}  // namespace

Image synth_spectral(int height, int width, int channels, std::uint64_t seed, double power) {
  if (!power_of_two(height) || !power_of_two(width))
    throw std::invalid_argument("synth_spectral: dimensions must be powers of two");
  Rng rng(seed);
  Image img(height, width, channels, 0.0);

  std::vector<double> re(static_cast<std::size_t>(height) * width);
  std::vector<double> im(re.size());
  for (int c = 0; c < channels; ++c) {
    // white Gaussian noise shaped by amplitude f^(-power/2)
    for (int v = 0; v < height; ++v)
      for (int u = 0; u < width; ++u) {
        const double fy = v <= height / 2 ? v : v - height;
        const double fx = u <= width / 2 ? u : u - width;
        const double f = std::sqrt(fx * fx + fy * fy);
        const double amp = (u == 0 && v == 0) ? 0.0 : std::pow(f, -power / 2.0);
        const std::size_t i = static_cast<std::size_t>(v) * width + u;
        re[i] = amp * rng.normal();
        im[i] = amp * rng.normal();
      }
    // 2-D inverse FFT: rows then columns; the real part is the field
    for (int v = 0; v < height; ++v) {
      std::vector<double> rr(re.begin() + static_cast<long>(v) * width,
                             re.begin() + static_cast<long>(v + 1) * width);
      std::vector<double> ri(im.begin() + static_cast<long>(v) * width,
                             im.begin() + static_cast<long>(v + 1) * width);
      fft1d(rr, ri, width, true);
      std::copy(rr.begin(), rr.end(), re.begin() + static_cast<long>(v) * width);
      std::copy(ri.begin(), ri.end(), im.begin() + static_cast<long>(v) * width);
    }
    std::vector<double> cr(static_cast<std::size_t>(height)), ci(cr.size());
    for (int u = 0; u < width; ++u) {
      for (int v = 0; v < height; ++v) {
        cr[static_cast<std::size_t>(v)] = re[static_cast<std::size_t>(v) * width + u];
        ci[static_cast<std::size_t>(v)] = im[static_cast<std::size_t>(v) * width + u];
      }
      fft1d(cr, ci, height, true);
      for (int v = 0; v < height; ++v) img.at(c, v, u) = cr[static_cast<std::size_t>(v)];
    }
    normalize_channel(img, c, 0.05, 0.95);
  }
  return img;
}

Image synth_smooth(int height, int width, int channels, std::uint64_t seed) {
  Image img(height, width, channels, 0.0);
  Rng rng(seed);
  for (int c = 0; c < channels; ++c) {
    add_octave(img, c, rng, 2, 1.0);
    add_octave(img, c, rng, 4, 0.15);
    normalize_channel(img, c, 0.46, 0.54);
  }
  return img;
}

Image synth_texture(int height, int width, int channels, std::uint64_t seed) {
  return synth_noise(height, width, channels, seed, 1.0);
}

namespace {

// Quantile of per-8x8-block mean |high-frequency DCT coefficient|; the generator
// scales texture contrast against this so scenes have a designed amount of
// borderline block energy regardless of seed.
double block_activity_q(const Image& x, double quantile) {
  const int bs = 8;
  static std::vector<double> basis = [] {
    std::vector<double> b(64);
    const double pi = 3.14159265358979323846264338327950288;
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8) : 0.5;
      for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(u) * 8 + i] = cu * std::cos((2 * i + 1) * u * pi / 16.0);
    }
    return b;
  }();
  std::vector<double> acts;
  for (int c = 0; c < x.channels; ++c)
    for (int by = 0; by + bs <= x.height; by += bs)
      for (int bx = 0; bx + bs <= x.width; bx += bs) {
        double t[64], y[64];
        for (int u = 0; u < 8; ++u)
          for (int j = 0; j < 8; ++j) {
            double s = 0;
            for (int i = 0; i < 8; ++i) s += basis[static_cast<std::size_t>(u) * 8 + i] * x.at(c, by + i, bx + j);
            t[u * 8 + j] = s;
          }
        for (int u = 0; u < 8; ++u)
          for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int j = 0; j < 8; ++j) s += t[u * 8 + j] * basis[static_cast<std::size_t>(v) * 8 + j];
            y[u * 8 + v] = s;
          }
        double act = 0;
        int nhf = 0;
        for (int u = 0; u < 8; ++u)
          for (int v = 0; v < 8; ++v)
            if (u + v >= 8) {
              act += std::abs(y[u * 8 + v]);
              ++nhf;
            }
        acts.push_back(act / nhf);
      }
  std::sort(acts.begin(), acts.end());
  return acts[static_cast<std::size_t>(quantile * (acts.size() - 1))];
}

}  // namespace

Image synth_scene(int height, int width, int channels, std::uint64_t seed, double texture_frac,
                  double activity_p92, double background_span) {
  Rng rng(seed);
  Image base(height, width, channels, 0.0);
  for (int c = 0; c < channels; ++c) {
    add_octave(base, c, rng, 2, 1.0);
    add_octave(base, c, rng, 5, 0.35);
    normalize_channel(base, c, 0.5 - background_span / 2.0, 0.5 + background_span / 2.0);
  }

  // one shared coverage field so channels stay spatially coherent
  Image mask(height, width, 1, 0.0);
  add_octave(mask, 0, rng, 3, 1.0);
  add_octave(mask, 0, rng, 6, 0.4);
  normalize_channel(mask, 0, 0.0, 1.0);
  // threshold at the requested coverage quantile, soft shoulder
  std::vector<double> sorted(mask.data);
  std::sort(sorted.begin(), sorted.end());
  const double thr =
      sorted[static_cast<std::size_t>((1.0 - texture_frac) * (sorted.size() - 1))];
  for (double& v : mask.data) {
    const double t = (v - thr) / 0.08;
    v = t <= 0.0 ? 0.0 : (t >= 1.0 ? 1.0 : t * t * (3 - 2 * t));
  }

  // dense texture, zero mean, confined to the mask
  Image tex(height, width, channels, 0.0);
  for (int c = 0; c < channels; ++c) {
    for (int grid : {8, 16, 32}) {
      if (grid >= std::min(height, width)) break;
      add_octave(tex, c, rng, grid, 1.0);
    }
    normalize_channel(tex, c, -1.0, 1.0);
  }

  auto compose = [&](double amp) {
    Image img = base;
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          double v = img.at(c, y, x) + amp * mask.at(0, y, x) * tex.at(c, y, x);
          img.at(c, y, x) = v < 0.02 ? 0.02 : (v > 0.98 ? 0.98 : v);
        }
    return img;
  };

  // bisect the texture contrast onto the requested activity level
  double lo = 0.005, hi = 0.5;
  for (int it = 0; it < 24; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (block_activity_q(compose(mid), 0.92) < activity_p92)
      lo = mid;
    else
      hi = mid;
  }
  return compose(0.5 * (lo + hi));
}

std::vector<Image> synth_fixture_trio(int height, int width, int channels, std::uint64_t seed) {
  return {synth_scene(height, width, channels, seed + 1, 0.30),
          synth_scene(height, width, channels, seed + 2, 0.45),
          synth_scene(height, width, channels, seed + 3, 0.60)};
}

std::vector<Image> synth_entropy_sweep(int height, int width, int channels, std::uint64_t seed,
                                       int count, double lo, double hi) {
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    out.push_back(synth_noise(height, width, channels, seed + 10 + static_cast<std::uint64_t>(i),
                              lo + (hi - lo) * t));
  }
  return out;
}

}  // namespace tmla
