#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tmla {

// Planar channel-major raster: data[(c*height + y)*width + x].
// Samples are nominally in [0,1]; intermediate pipeline stages (pre-clip
// reconstructions, gradients) reuse the container without that contract.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h),
        width(w),
        channels(c),
        data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) *
                 static_cast<std::size_t>(c),
             fill) {}

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  double* plane(int c) {
    return data.data() + static_cast<std::size_t>(c) * height * width;
  }
  const double* plane(int c) const {
    return data.data() + static_cast<std::size_t>(c) * height * width;
  }

  std::size_t size() const { return data.size(); }
  long long pixels() const {
    return static_cast<long long>(height) * width;
  }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

void require_same_shape(const Image& a, const Image& b, const std::string& what);

// BT.601 luma for RGB; single-channel inputs are returned unchanged.
Image to_grayscale(const Image& img);

// per-sample clip(gain*|a-b|, 0, 1)
Image diff_map(const Image& a, const Image& b, double gain = 50.0);

Image clip01(const Image& img);

// Subgradient of clip01 used throughout the backward passes:
// 1 inside (0,1), 0 outside, 0.5 exactly at a boundary.
double clip01_subgrad(double pre_clip_value);

}  // namespace tmla
