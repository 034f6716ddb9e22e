#include "tmla/image.hpp"

#include <cmath>
#include <stdexcept>

#include "tmla/parallel.hpp"

namespace tmla {

void require_same_shape(const Image& a, const Image& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(what + ": shape mismatch (" +
                                std::to_string(a.height) + "x" + std::to_string(a.width) + "x" +
                                std::to_string(a.channels) + " vs " +
                                std::to_string(b.height) + "x" + std::to_string(b.width) + "x" +
                                std::to_string(b.channels) + ")");
  }
}

Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) {
    throw std::invalid_argument("to_grayscale: expected 1 or 3 channels, got " +
                                std::to_string(img.channels));
  }
  Image out(img.height, img.width, 1);
  const double* r = img.plane(0);
  const double* g = img.plane(1);
  const double* b = img.plane(2);
  par::for_n(img.pixels(), [&](long long i) {
    out.data[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  });
  return out;
}

Image diff_map(const Image& a, const Image& b, double gain) {
  require_same_shape(a, b, "diff_map");
  if (gain <= 0.0) throw std::invalid_argument("diff_map: gain must be > 0");
  Image out(a.height, a.width, a.channels);
  par::for_n(static_cast<long long>(a.size()), [&](long long i) {
    double v = gain * std::abs(a.data[i] - b.data[i]);
    out.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  });
  return out;
}

Image clip01(const Image& img) {
  Image out = img;
  par::for_n(static_cast<long long>(out.size()), [&](long long i) {
    double v = out.data[i];
    out.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  });
  return out;
}

double clip01_subgrad(double v) {
  if (v < 0.0 || v > 1.0) return 0.0;
  if (v == 0.0 || v == 1.0) return 0.5;
  return 1.0;
}

}  // namespace tmla
