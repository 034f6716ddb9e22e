#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tmla/image.hpp"

namespace tmla {

struct Plane {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Plane& o) const { return rows == o.rows && cols == o.cols; }
};

// Analysis/synthesis filter pair. Every preset shipped here is orthonormal,
// so rec_* equals the analysis pair and the transform adjoint is the forward
// transform. Presets are validated at construction: sum(lo^2)=1, double-shift
// orthogonality and a random-signal perfect-reconstruction probe, all at 1e-10.
struct FilterSpec {
  std::string name;
  std::vector<double> lo, hi;          // analysis
  std::vector<double> rec_lo, rec_hi;  // synthesis

  // haar, db2, sym2, coif2, bior1.1
  static const FilterSpec& preset(std::string_view name);
  static const std::vector<std::string>& preset_names();
};

struct DetailBand {
  Plane lh, hl, hh;
};

struct ChannelPyramid {
  Plane approx;                    // L_S
  std::vector<DetailBand> detail;  // detail[k-1] holds scale k, k = 1..S
};

struct WaveletPyramid {
  int levels = 0;
  FilterSpec filter;
  int image_height = 0, image_width = 0, image_channels = 0;
  std::vector<ChannelPyramid> ch;

  // Dimensions of the plane set at scale k (1..levels, and levels for approx).
  int plane_rows(int k) const;
  int plane_cols(int k) const;
};

// Recursive 2-D separable DWT. Odd dimensions are evenized per level by
// replicating the last row/column; boundaries are periodic, which keeps
// perfect reconstruction exact for every orthonormal preset.
WaveletPyramid dwt2(const Image& img, const FilterSpec& spec, int levels);

// Exact inverse of dwt2 (pre-clip plane values; may leave [0,1]).
Image idwt2(const WaveletPyramid& pyr);

// Adjoint of idwt2 as a linear map, used by the gradient chain. For even
// dimensions this is identical to dwt2; odd dimensions differ only in that
// the cotangent is zero-extended instead of edge-replicated.
WaveletPyramid dwt2_adjoint(const Image& cotangent, const FilterSpec& spec, int levels);

// |LH_k| + |HL_k| + |HH_k| elementwise at scale k for one channel.
Plane combined_detail_magnitude(const WaveletPyramid& pyr, int scale, int channel = 0);

}  // namespace tmla
