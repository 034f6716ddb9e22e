#include "tmla/wavelet.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include "tmla/parallel.hpp"
#include "tmla/rng.hpp"

namespace tmla {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

int half_up(int n) { return (n + 1) / 2; }

// ---------------------------------------------------------------------------
// Filter construction
// ---------------------------------------------------------------------------

// Quadrature mirror: hi[n] = (-1)^n lo[L-1-n]. With the correlation-style
// analysis below this yields an orthogonal transform matrix whenever lo
// satisfies the double-shift orthonormality conditions.
std::vector<double> qmf(const std::vector<double>& lo) {
  const std::size_t L = lo.size();
  std::vector<double> hi(L);
  for (std::size_t n = 0; n < L; ++n) {
    const double v = lo[L - 1 - n];
    hi[n] = (n % 2 == 0) ? v : -v;
  }
  return hi;
}

// Defining equations for an orthonormal coiflet-style lowpass filter:
//   sum h             = sqrt(2)
//   sum h[n]h[n+2k]   = delta_k0             (k = 0..L/2-1)
//   sum (-1)^n n^p h  = 0                    (p = 0..3, wavelet moments)
//   2nd/3rd central moments of h vanish      (scaling-function moments)
// Written shift-invariantly (center = first moment / sqrt(2)) so the tap
// indexing convention drops out.
std::vector<double> coiflet_residual(const std::vector<double>& h) {
  const int L = static_cast<int>(h.size());
  std::vector<double> F;
  F.reserve(static_cast<std::size_t>(L / 2) + 7);

  double s = 0.0;
  for (double v : h) s += v;
  F.push_back(s - std::sqrt(2.0));

  for (int k = 0; k < L / 2; ++k) {
    double o = 0.0;
    for (int n = 0; n + 2 * k < L; ++n) o += h[n] * h[n + 2 * k];
    F.push_back(o - (k == 0 ? 1.0 : 0.0));
  }

  for (int p = 0; p <= 3; ++p) {
    double m = 0.0;
    for (int n = 0; n < L; ++n) {
      const double np = p == 0 ? 1.0 : std::pow(static_cast<double>(n), p);
      m += (n % 2 == 0 ? 1.0 : -1.0) * np * h[n];
    }
    F.push_back(m);
  }

  double m1 = 0.0;
  for (int n = 0; n < L; ++n) m1 += n * h[n];
  const double c = m1 / std::sqrt(2.0);
  for (int p = 2; p <= 3; ++p) {
    double mu = 0.0;
    for (int n = 0; n < L; ++n) mu += std::pow(n - c, p) * h[n];
    F.push_back(mu);
  }
  return F;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Gauss-Newton least squares on the residual above. The seed only selects the
// solution branch; the converged coefficients are pinned by the equations.
std::vector<double> solve_coiflet(std::vector<double> h) {
  const int n = static_cast<int>(h.size());
  for (int iter = 0; iter < 60; ++iter) {
    std::vector<double> F = coiflet_residual(h);
    if (inf_norm(F) < 1e-13) break;
    const int m = static_cast<int>(F.size());

    // numeric Jacobian, central differences
    std::vector<double> J(static_cast<std::size_t>(m) * n);
    const double step = 1e-7;
    for (int j = 0; j < n; ++j) {
      const double keep = h[j];
      h[j] = keep + step;
      std::vector<double> Fp = coiflet_residual(h);
      h[j] = keep - step;
      std::vector<double> Fm = coiflet_residual(h);
      h[j] = keep;
      for (int i = 0; i < m; ++i)
        J[static_cast<std::size_t>(i) * n + j] = (Fp[i] - Fm[i]) / (2.0 * step);
    }

    // normal equations J^T J d = -J^T F
    std::vector<double> A(static_cast<std::size_t>(n) * n, 0.0), b(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int r = 0; r < m; ++r)
          s += J[static_cast<std::size_t>(r) * n + i] * J[static_cast<std::size_t>(r) * n + j];
        A[static_cast<std::size_t>(i) * n + j] = s;
      }
      double s = 0.0;
      for (int r = 0; r < m; ++r) s += J[static_cast<std::size_t>(r) * n + i] * F[r];
      b[i] = -s;
    }

    // Gaussian elimination with partial pivoting
    std::vector<int> piv(n);
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int col = 0; col < n; ++col) {
      int best = col;
      for (int r = col + 1; r < n; ++r)
        if (std::abs(A[static_cast<std::size_t>(r) * n + col]) >
            std::abs(A[static_cast<std::size_t>(best) * n + col]))
          best = r;
      if (best != col) {
        for (int j = 0; j < n; ++j)
          std::swap(A[static_cast<std::size_t>(col) * n + j],
                    A[static_cast<std::size_t>(best) * n + j]);
        std::swap(b[col], b[best]);
      }
      const double d = A[static_cast<std::size_t>(col) * n + col];
      if (std::abs(d) < 1e-300) throw std::runtime_error("coiflet solve: singular system");
      for (int r = col + 1; r < n; ++r) {
        const double f = A[static_cast<std::size_t>(r) * n + col] / d;
        if (f == 0.0) continue;
        for (int j = col; j < n; ++j)
          A[static_cast<std::size_t>(r) * n + j] -= f * A[static_cast<std::size_t>(col) * n + j];
        b[r] -= f * b[col];
      }
    }
    std::vector<double> d(n);
    for (int r = n - 1; r >= 0; --r) {
      double s = b[r];
      for (int j = r + 1; j < n; ++j) s -= A[static_cast<std::size_t>(r) * n + j] * d[j];
      d[r] = s / A[static_cast<std::size_t>(r) * n + r];
    }
    for (int i = 0; i < n; ++i) h[i] += d[i];
  }

  if (inf_norm(coiflet_residual(h)) > 1e-12)
    throw std::runtime_error("coiflet solve: did not converge");
  return h;
}

void analyze_1d(const double* x, int n, const FilterSpec& f, double* out_lo, double* out_hi);
void synthesize_1d(const double* lo, const double* hi, int n, const FilterSpec& f, double* x);

// Construction-time contract: orthonormality and perfect reconstruction.
void validate_orthonormal(const FilterSpec& f) {
  const auto check = [&](double got, double want, const char* what) {
    if (std::abs(got - want) > 1e-10)
      throw std::runtime_error("filter '" + f.name + "': " + what + " violated");
  };
  const int L = static_cast<int>(f.lo.size());
  for (int k = 0; k < L / 2; ++k) {
    double ll = 0.0, hh = 0.0, lh = 0.0;
    for (int n = 0; n + 2 * k < L; ++n) {
      ll += f.lo[n] * f.lo[n + 2 * k];
      hh += f.hi[n] * f.hi[n + 2 * k];
      lh += f.lo[n] * f.hi[n + 2 * k];
      if (k > 0) lh += f.hi[n] * f.lo[n + 2 * k];
    }
    check(ll, k == 0 ? 1.0 : 0.0, "lowpass orthonormality");
    check(hh, k == 0 ? 1.0 : 0.0, "highpass orthonormality");
    check(lh, 0.0, "cross orthogonality");
  }

  // PR probe on a fixed pseudo-random signal
  Rng rng(0x5eed0f11ULL);
  const int n = 32;
  std::vector<double> x(n), lo(n / 2), hi(n / 2), back(n);
  for (auto& v : x) v = rng.uniform();
  analyze_1d(x.data(), n, f, lo.data(), hi.data());
  synthesize_1d(lo.data(), hi.data(), n, f, back.data());
  for (int i = 0; i < n; ++i)
    if (std::abs(back[i] - x[i]) > 1e-10)
      throw std::runtime_error("filter '" + f.name + "': perfect reconstruction violated");
}

FilterSpec make_orthonormal(std::string name, std::vector<double> lo) {
  FilterSpec f;
  f.name = std::move(name);
  f.lo = std::move(lo);
  f.hi = qmf(f.lo);
  f.rec_lo = f.lo;
  f.rec_hi = f.hi;
  validate_orthonormal(f);
  return f;
}

FilterSpec make_haar(std::string name) {
  return make_orthonormal(std::move(name), {kInvSqrt2, kInvSqrt2});
}

FilterSpec make_db2() {
  // Algebraic solution of the 4-tap orthogonality + 2 vanishing moment
  // system: h = [1+r, 3+r, 3-r, 1-r] / (4*sqrt(2)), r = sqrt(3).
  const double r = std::sqrt(3.0);
  const double s = 1.0 / (4.0 * std::sqrt(2.0));
  return make_orthonormal("db2", {(1 + r) * s, (3 + r) * s, (3 - r) * s, (1 - r) * s});
}

FilterSpec make_sym2() {
  // For length 4 the least-asymmetric solution is the mirrored db2 root.
  FilterSpec db2 = make_db2();
  std::vector<double> lo(db2.lo.rbegin(), db2.lo.rend());
  return make_orthonormal("sym2", std::move(lo));
}

FilterSpec make_coif2() {
  // Seeds at ~5 decimals; Gauss-Newton refines them to machine precision
  // against the defining equations above.
  std::vector<double> seed = {-0.00072, -0.00182, 0.00561, 0.02368, -0.05943, -0.07649,
                              0.41701,  0.81272,  0.38611, -0.06737, -0.04146, 0.01639};
  return make_orthonormal("coif2", solve_coiflet(std::move(seed)));
}

// ---------------------------------------------------------------------------
// 1-D filter bank, periodic boundary, even length
// ---------------------------------------------------------------------------

void analyze_1d(const double* x, int n, const FilterSpec& f, double* out_lo, double* out_hi) {
  const int L = static_cast<int>(f.lo.size());
  const int half = n / 2;
  for (int m = 0; m < half; ++m) {
    double sl = 0.0, sh = 0.0;
    for (int t = 0; t < L; ++t) {
      int idx = 2 * m + t;
      if (idx >= n) idx -= n * (idx / n);
      const double v = x[idx];
      sl += f.lo[t] * v;
      sh += f.hi[t] * v;
    }
    out_lo[m] = sl;
    out_hi[m] = sh;
  }
}

// transpose of analyze_1d (equals the inverse for orthonormal filters)
void synthesize_1d(const double* lo, const double* hi, int n, const FilterSpec& f, double* x) {
  const int L = static_cast<int>(f.rec_lo.size());
  const int half = n / 2;
  for (int i = 0; i < n; ++i) x[i] = 0.0;
  for (int m = 0; m < half; ++m) {
    for (int t = 0; t < L; ++t) {
      int idx = 2 * m + t;
      if (idx >= n) idx -= n * (idx / n);
      x[idx] += f.rec_lo[t] * lo[m] + f.rec_hi[t] * hi[m];
    }
  }
}

enum class Evenize { replicate, zero };

// Append one row/column when odd. `replicate` is the forward-transform
// policy; `zero` makes the same code path the adjoint of the inverse.
Plane evenized(const Plane& p, Evenize mode) {
  const int R = p.rows + (p.rows % 2);
  const int C = p.cols + (p.cols % 2);
  if (R == p.rows && C == p.cols) return p;
  Plane out(R, C, 0.0);
  for (int r = 0; r < p.rows; ++r)
    for (int c = 0; c < p.cols; ++c) out.at(r, c) = p.at(r, c);
  if (mode == Evenize::replicate) {
    if (C != p.cols)
      for (int r = 0; r < p.rows; ++r) out.at(r, C - 1) = p.at(r, p.cols - 1);
    if (R != p.rows)
      for (int c = 0; c < C; ++c) out.at(R - 1, c) = out.at(R - 2, c);
  }
  return out;
}

struct LevelBands {
  Plane ll, lh, hl, hh;
};

// One 2-D analysis level. Row pass filters along width, column pass along
// height; with the Haar pair this reduces exactly to the 2x2 block form
// LL=(a+b+c+d)/2, LH=(a-b+c-d)/2, HL=(a+b-c-d)/2, HH=(a-b-c+d)/2.
LevelBands level_analyze(const Plane& in, const FilterSpec& f, Evenize mode) {
  const Plane p = evenized(in, mode);
  const int R = p.rows, C = p.cols;
  const int hc = C / 2, hr = R / 2;

  Plane row_lo(R, hc), row_hi(R, hc);
  par::for_n(R, [&](long long r) {
    analyze_1d(&p.v[static_cast<std::size_t>(r) * C], C, f,
               &row_lo.v[static_cast<std::size_t>(r) * hc],
               &row_hi.v[static_cast<std::size_t>(r) * hc]);
  });

  LevelBands out;
  out.ll = Plane(hr, hc);
  out.lh = Plane(hr, hc);
  out.hl = Plane(hr, hc);
  out.hh = Plane(hr, hc);
  par::for_n(hc, [&](long long c) {
    std::vector<double> col(R), lo(hr), hi(hr);
    for (int r = 0; r < R; ++r) col[r] = row_lo.at(r, static_cast<int>(c));
    analyze_1d(col.data(), R, f, lo.data(), hi.data());
    for (int r = 0; r < hr; ++r) {
      out.ll.at(r, static_cast<int>(c)) = lo[r];
      out.hl.at(r, static_cast<int>(c)) = hi[r];
    }
    for (int r = 0; r < R; ++r) col[r] = row_hi.at(r, static_cast<int>(c));
    analyze_1d(col.data(), R, f, lo.data(), hi.data());
    for (int r = 0; r < hr; ++r) {
      out.lh.at(r, static_cast<int>(c)) = lo[r];
      out.hh.at(r, static_cast<int>(c)) = hi[r];
    }
  });
  return out;
}

// Inverse of level_analyze onto a crop_rows x crop_cols plane.
Plane level_synthesize(const LevelBands& b, const FilterSpec& f, int crop_rows, int crop_cols) {
  const int hr = b.ll.rows, hc = b.ll.cols;
  const int R = 2 * hr, C = 2 * hc;

  Plane row_lo(R, hc), row_hi(R, hc);
  par::for_n(hc, [&](long long c) {
    std::vector<double> lo(hr), hi(hr), col(R);
    for (int r = 0; r < hr; ++r) {
      lo[r] = b.ll.at(r, static_cast<int>(c));
      hi[r] = b.hl.at(r, static_cast<int>(c));
    }
    synthesize_1d(lo.data(), hi.data(), R, f, col.data());
    for (int r = 0; r < R; ++r) row_lo.at(r, static_cast<int>(c)) = col[r];
    for (int r = 0; r < hr; ++r) {
      lo[r] = b.lh.at(r, static_cast<int>(c));
      hi[r] = b.hh.at(r, static_cast<int>(c));
    }
    synthesize_1d(lo.data(), hi.data(), R, f, col.data());
    for (int r = 0; r < R; ++r) row_hi.at(r, static_cast<int>(c)) = col[r];
  });

  Plane full(R, C);
  par::for_n(R, [&](long long r) {
    synthesize_1d(&row_lo.v[static_cast<std::size_t>(r) * hc],
                  &row_hi.v[static_cast<std::size_t>(r) * hc], C, f,
                  &full.v[static_cast<std::size_t>(r) * C]);
  });

  if (crop_rows == R && crop_cols == C) return full;
  Plane out(crop_rows, crop_cols);
  for (int r = 0; r < crop_rows; ++r)
    for (int c = 0; c < crop_cols; ++c) out.at(r, c) = full.at(r, c);
  return out;
}

// Dimensions entering each analysis level: dims[0] = image, dims[k] = plane
// size at scale k (= ceil of the previous over 2).
std::vector<std::pair<int, int>> dim_ladder(int rows, int cols, int levels) {
  std::vector<std::pair<int, int>> dims(static_cast<std::size_t>(levels) + 1);
  dims[0] = {rows, cols};
  for (int k = 1; k <= levels; ++k)
    dims[k] = {half_up(dims[k - 1].first), half_up(dims[k - 1].second)};
  return dims;
}

WaveletPyramid dwt2_impl(const Image& img, const FilterSpec& spec, int levels, Evenize mode) {
  if (levels < 1) throw std::invalid_argument("dwt2: levels must be >= 1");
  if (img.channels < 1 || img.height < 1 || img.width < 1)
    throw std::invalid_argument("dwt2: empty image");

  const auto dims = dim_ladder(img.height, img.width, levels);
  for (int k = 0; k < levels; ++k)
    if (dims[k].first < 2 || dims[k].second < 2)
      throw std::invalid_argument("dwt2: " + std::to_string(levels) +
                                  " levels too large for " + std::to_string(img.height) + "x" +
                                  std::to_string(img.width) + " image");

  WaveletPyramid pyr;
  pyr.levels = levels;
  pyr.filter = spec;
  pyr.image_height = img.height;
  pyr.image_width = img.width;
  pyr.image_channels = img.channels;
  pyr.ch.resize(static_cast<std::size_t>(img.channels));

  for (int c = 0; c < img.channels; ++c) {
    Plane cur(img.height, img.width);
    const double* src = img.plane(c);
    std::copy(src, src + cur.size(), cur.v.begin());

    ChannelPyramid& cp = pyr.ch[static_cast<std::size_t>(c)];
    cp.detail.resize(static_cast<std::size_t>(levels));
    for (int k = 1; k <= levels; ++k) {
      LevelBands b = level_analyze(cur, spec, mode);
      DetailBand& d = cp.detail[static_cast<std::size_t>(k - 1)];
      d.lh = std::move(b.lh);
      d.hl = std::move(b.hl);
      d.hh = std::move(b.hh);
      cur = std::move(b.ll);
    }
    cp.approx = std::move(cur);
  }
  return pyr;
}

}  // namespace

int WaveletPyramid::plane_rows(int k) const {
  return dim_ladder(image_height, image_width, levels)[static_cast<std::size_t>(k)].first;
}
int WaveletPyramid::plane_cols(int k) const {
  return dim_ladder(image_height, image_width, levels)[static_cast<std::size_t>(k)].second;
}

const FilterSpec& FilterSpec::preset(std::string_view name) {
  static const std::map<std::string, FilterSpec, std::less<>> presets = [] {
    std::map<std::string, FilterSpec, std::less<>> m;
    m.emplace("haar", make_haar("haar"));
    m.emplace("db2", make_db2());
    m.emplace("sym2", make_sym2());
    m.emplace("coif2", make_coif2());
    // 2-tap symmetric biorthogonal pair; numerically coincides with Haar.
    m.emplace("bior1.1", make_haar("bior1.1"));
    return m;
  }();
  auto it = presets.find(name);
  if (it == presets.end())
    throw std::invalid_argument("unknown wavelet preset '" + std::string(name) + "'");
  return it->second;
}

const std::vector<std::string>& FilterSpec::preset_names() {
  static const std::vector<std::string> names = {"haar", "db2", "sym2", "coif2", "bior1.1"};
  return names;
}

WaveletPyramid dwt2(const Image& img, const FilterSpec& spec, int levels) {
  return dwt2_impl(img, spec, levels, Evenize::replicate);
}

WaveletPyramid dwt2_adjoint(const Image& cotangent, const FilterSpec& spec, int levels) {
  return dwt2_impl(cotangent, spec, levels, Evenize::zero);
}

Image idwt2(const WaveletPyramid& pyr) {
  if (pyr.levels < 1 || pyr.ch.empty()) throw std::invalid_argument("idwt2: empty pyramid");
  const auto dims = dim_ladder(pyr.image_height, pyr.image_width, pyr.levels);

  for (const ChannelPyramid& cp : pyr.ch) {
    if (static_cast<int>(cp.detail.size()) != pyr.levels)
      throw std::invalid_argument("idwt2: detail scale count mismatch");
    for (int k = 1; k <= pyr.levels; ++k) {
      const DetailBand& d = cp.detail[static_cast<std::size_t>(k - 1)];
      const auto [r, c] = dims[static_cast<std::size_t>(k)];
      for (const Plane* p : {&d.lh, &d.hl, &d.hh})
        if (p->rows != r || p->cols != c)
          throw std::invalid_argument("idwt2: inconsistent plane shape at scale " +
                                      std::to_string(k));
    }
    const auto [ar, ac] = dims[static_cast<std::size_t>(pyr.levels)];
    if (cp.approx.rows != ar || cp.approx.cols != ac)
      throw std::invalid_argument("idwt2: inconsistent approximation shape");
  }

  Image out(pyr.image_height, pyr.image_width, pyr.image_channels);
  for (int c = 0; c < pyr.image_channels; ++c) {
    const ChannelPyramid& cp = pyr.ch[static_cast<std::size_t>(c)];
    Plane cur = cp.approx;
    for (int k = pyr.levels; k >= 1; --k) {
      const DetailBand& d = cp.detail[static_cast<std::size_t>(k - 1)];
      LevelBands b;
      b.ll = std::move(cur);
      b.lh = d.lh;
      b.hl = d.hl;
      b.hh = d.hh;
      const auto [r0, c0] = dims[static_cast<std::size_t>(k - 1)];
      cur = level_synthesize(b, pyr.filter, r0, c0);
    }
    std::copy(cur.v.begin(), cur.v.end(), out.plane(c));
  }
  return out;
}

Plane combined_detail_magnitude(const WaveletPyramid& pyr, int scale, int channel) {
  if (scale < 1 || scale > pyr.levels)
    throw std::invalid_argument("combined_detail_magnitude: scale out of range");
  if (channel < 0 || channel >= pyr.image_channels)
    throw std::invalid_argument("combined_detail_magnitude: channel out of range");
  const DetailBand& d = pyr.ch[static_cast<std::size_t>(channel)]
                            .detail[static_cast<std::size_t>(scale - 1)];
  Plane out(d.lh.rows, d.lh.cols);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.v[i] = std::abs(d.lh.v[i]) + std::abs(d.hl.v[i]) + std::abs(d.hh.v[i]);
  return out;
}

}  // namespace tmla
