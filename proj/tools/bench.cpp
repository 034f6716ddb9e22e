// Kernel benchmark: the OpenMP paths against their serial references, and
// thread-count scaling of the hot loops. Numbers are wall-clock medians of
// several repeats; outputs are cross-checked so a refactor cannot silently
// diverge.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "tmla/codec.hpp"
#include "tmla/entropy.hpp"
#include "tmla/metrics.hpp"
#include "tmla/parallel.hpp"
#include "tmla/reference.hpp"
#include "tmla/synth.hpp"
#include "tmla/wavelet.hpp"

using namespace tmla;
using clock_type = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int repeats = 5) {
  std::vector<double> times;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = clock_type::now();
    fn();
    const auto t1 = clock_type::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void row(const char* name, double serial_ms, double parallel_ms, double max_diff) {
  std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   maxdiff %.2e\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms, max_diff);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", par::threads());

  const Image img = synth_scene(512, 512, 3, 42);

  // ---- Haar DWT level: block-formula reference vs separable OpenMP path
  {
    Plane in(img.height, img.width);
    std::copy(img.data.begin(), img.data.begin() + in.size(), in.v.begin());
    ref::HaarBands bands;
    const double t_ref = time_ms([&] { bands = ref::haar_level(in); });

    const FilterSpec& haar = FilterSpec::preset("haar");
    WaveletPyramid pyr;
    Image gray(img.height, img.width, 1);
    std::copy(in.v.begin(), in.v.end(), gray.data.begin());
    const double t_par = time_ms([&] { pyr = dwt2(gray, haar, 1); });

    double md = 0;
    for (std::size_t i = 0; i < bands.ll.size(); ++i)
      md = std::max(md, std::abs(bands.ll.v[i] - pyr.ch[0].approx.v[i]));
    row("haar level 512x512", t_ref, t_par, md);
  }

  // ---- full 3-level DWT + inverse round trip
  {
    const FilterSpec& haar = FilterSpec::preset("haar");
    WaveletPyramid pyr;
    const double t = time_ms([&] {
      pyr = dwt2(img, haar, 3);
      Image back = idwt2(pyr);
      (void)back;
    });
    std::printf("%-28s %9.3f ms per round trip\n", "dwt2+idwt2 S=3 512x512x3", t);
  }

  // ---- surrogate codec forward
  {
    SurrogateCodecParams p;
    std::pair<Image, double> a, b;
    const double t_ref = time_ms([&] { a = ref::surrogate_forward(img, p); });
    const double t_par = time_ms([&] { b = surrogate_forward(img, p); });
    double md = 0;
    for (std::size_t i = 0; i < a.first.size(); ++i)
      md = std::max(md, std::abs(a.first.data[i] - b.first.data[i]));
    row("surrogate forward 512x512x3", t_ref, t_par, md);
  }

  // ---- local entropy map (naive rebuild vs incremental slide)
  {
    const Image small = synth_scene(256, 256, 1, 43);
    EntropyMap a, b;
    const double t_ref = time_ms([&] { a = ref::local_entropy_map(small, 10); }, 3);
    const double t_par = time_ms([&] { b = local_entropy_map(small, 10); }, 3);
    double md = 0;
    for (std::size_t i = 0; i < a.map.size(); ++i)
      md = std::max(md, std::abs(a.map.v[i] - b.map.v[i]));
    row("entropy r=10 256x256", t_ref, t_par, md);
  }

  // ---- mse reduction
  {
    const Image other = synth_scene(512, 512, 3, 44);
    double a = 0, b = 0;
    const double t_ref = time_ms([&] { a = ref::mse(img, other); });
    const double t_par = time_ms([&] { b = mse(img, other); });
    row("mse 512x512x3", t_ref, t_par, std::abs(a - b));
  }

  // ---- ssim (parallel only; the unit suite holds the naive oracle)
  {
    const Image other = synth_scene(512, 512, 3, 45);
    double s = 0;
    const double t = time_ms([&] { s = ssim(img, other); });
    std::printf("%-28s %9.3f ms (value %.4f)\n", "ssim 512x512x3", t, s);
  }

  return 0;
}
