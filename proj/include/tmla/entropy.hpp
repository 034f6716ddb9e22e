#pragma once

#include <vector>

#include "tmla/image.hpp"
#include "tmla/wavelet.hpp"

namespace tmla {

// Normalized local Shannon entropy over circular neighborhoods.
struct EntropyMap {
  Plane map;       // E(x,y)/8 in [0,1]
  int radius = 0;
  double mean = 0.0;  // mu_E
};

// Per-pixel entropy of the 256-level intensity histogram inside the disk
// dx^2+dy^2 <= r^2, clipped at image borders and normalized by the clipped
// population; values divided by E_max = 8 bits.
EntropyMap local_entropy_map(const Image& img, int radius);

// Greedy size-k subset of `candidates` matching the quantiles of `reference`
// (squared quantile distance). Deterministic; ties resolved to lower index.
std::vector<int> entropy_matched_subset(const std::vector<double>& candidates,
                                        const std::vector<double>& reference, int k);

struct Correlation {
  double pearson = 0.0;
  double spearman = 0.0;
  double p_value = 1.0;  // two-sided, t-distribution, for pearson
};

// Sample Pearson, Spearman (average ranks on ties), and the two-sided
// p-value of the Pearson coefficient via the t transform with n-2 dof.
Correlation correlation(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace tmla
