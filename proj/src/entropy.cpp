#include "tmla/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tmla/parallel.hpp"

namespace tmla {

namespace {

constexpr double kEMax = 8.0;  // bits, 256-level histogram

// 256-level discretization of a [0,1] grayscale sample (8-bit convention).
int discretize(double y) {
  long q = std::lround(y * 255.0);
  if (q < 0) q = 0;
  if (q > 255) q = 255;
  return static_cast<int>(q);
}

// Entropy of an integer histogram in bits. Bins visited in index order,
// zero-count bins skipped -- the incremental path and the naive reference
// both run exactly this loop, so their results are bit-identical.
double histogram_entropy(const int* hist, int population) {
  double e = 0.0;
  const double n = static_cast<double>(population);
  for (int b = 0; b < 256; ++b) {
    if (hist[b] == 0) continue;
    const double p = hist[b] / n;
    e -= p * std::log2(p);
  }
  return e;
}

}  // namespace

EntropyMap local_entropy_map(const Image& img, int radius) {
  if (radius < 1) throw std::invalid_argument("local_entropy_map: radius must be >= 1");
  if (img.height < 1 || img.width < 1) throw std::invalid_argument("local_entropy_map: empty image");

  const Image gray = to_grayscale(img);
  const int H = gray.height, W = gray.width, r = radius;

  std::vector<int> levels(static_cast<std::size_t>(H) * W);
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = discretize(gray.data[i]);

  // horizontal half-extent of the disk at each row offset
  std::vector<int> span(static_cast<std::size_t>(2 * r + 1));
  for (int dy = -r; dy <= r; ++dy)
    span[static_cast<std::size_t>(dy + r)] =
        static_cast<int>(std::floor(std::sqrt(static_cast<double>(r) * r - static_cast<double>(dy) * dy)));

  EntropyMap em;
  em.radius = radius;
  em.map = Plane(H, W);

  // Rows are independent scans: build the histogram at x=0, then slide it
  // right, touching only the disk's entering/leaving columns.
  par::for_n(H, [&](long long yy) {
    const int y = static_cast<int>(yy);
    int hist[256] = {0};
    int population = 0;

    const int dy_lo = std::max(-r, -y);
    const int dy_hi = std::min(r, H - 1 - y);

    for (int dy = dy_lo; dy <= dy_hi; ++dy) {
      const int s = span[static_cast<std::size_t>(dy + r)];
      const int row = y + dy;
      const int x_hi = std::min(W - 1, s);
      for (int x = 0; x <= x_hi; ++x) {
        ++hist[levels[static_cast<std::size_t>(row) * W + x]];
        ++population;
      }
    }
    em.map.at(y, 0) = histogram_entropy(hist, population) / kEMax;

    for (int x = 1; x < W; ++x) {
      for (int dy = dy_lo; dy <= dy_hi; ++dy) {
        const int s = span[static_cast<std::size_t>(dy + r)];
        const int row = y + dy;
        const int leaving = x - 1 - s;
        if (leaving >= 0) {
          --hist[levels[static_cast<std::size_t>(row) * W + leaving]];
          --population;
        }
        const int entering = x + s;
        if (entering <= W - 1) {
          ++hist[levels[static_cast<std::size_t>(row) * W + entering]];
          ++population;
        }
      }
      em.map.at(y, x) = histogram_entropy(hist, population) / kEMax;
    }
  });

  em.mean = par::sum_chunked(em.map.v.data(), em.map.size()) / static_cast<double>(em.map.size());
  return em;
}

std::vector<int> entropy_matched_subset(const std::vector<double>& candidates,
                                        const std::vector<double>& reference, int k) {
  if (candidates.empty() || reference.empty())
    throw std::invalid_argument("entropy_matched_subset: empty input");
  if (k < 1 || k > static_cast<int>(candidates.size()))
    throw std::invalid_argument("entropy_matched_subset: k out of range");

  std::vector<double> ref_sorted = reference;
  std::sort(ref_sorted.begin(), ref_sorted.end());
  const int m = static_cast<int>(ref_sorted.size());

  // midpoint quantiles of the reference at u = (i+0.5)/k
  std::vector<double> targets(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double u = (i + 0.5) / k;
    int idx = static_cast<int>(std::floor(u * m));
    if (idx > m - 1) idx = m - 1;
    targets[static_cast<std::size_t>(i)] = ref_sorted[static_cast<std::size_t>(idx)];
  }

  std::vector<bool> used(candidates.size(), false);
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    int best = -1;
    double best_d = 0.0;
    for (int j = 0; j < static_cast<int>(candidates.size()); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double d = std::abs(candidates[static_cast<std::size_t>(j)] - targets[static_cast<std::size_t>(i)]);
      if (best < 0 || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    picked.push_back(best);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

namespace {

// regularized incomplete beta via Lentz's continued fraction
double betacf(double a, double b, double x) {
  const double eps = 3e-16, fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double pearson_of(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("correlation: zero variance, correlation undefined");
  double r = sxy / std::sqrt(sxx * syy);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  return r;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

Correlation correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("correlation: length mismatch");
  if (xs.size() < 3) throw std::invalid_argument("correlation: need at least 3 samples");

  Correlation out;
  out.pearson = pearson_of(xs, ys);
  out.spearman = pearson_of(average_ranks(xs), average_ranks(ys));

  const double n = static_cast<double>(xs.size());
  const double r = out.pearson;
  if (std::abs(r) >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double t2 = r * r * (n - 2.0) / (1.0 - r * r);
    const double nu = n - 2.0;
    out.p_value = betai(nu / 2.0, 0.5, nu / (nu + t2));
  }
  return out;
}

}  // namespace tmla
