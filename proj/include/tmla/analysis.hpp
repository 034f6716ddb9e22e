#pragma once

#include <string>
#include <vector>

#include "tmla/entropy.hpp"
#include "tmla/image.hpp"
#include "tmla/metrics.hpp"

namespace tmla {

struct AlphaEstimate {
  std::vector<double> per_image_ratio;  // rho_i, median subband-max ratio
  double alpha_emp = 0.0;               // mean of rho_i
  int levels = 0;
};

// Subband-maximum decay ratios under a Haar pyramid: per image, m_k is the
// max |coefficient| per scale (pooled over the three detail orientations and
// the channels; the approximation band is the coarsest entry), r_k the ratio
// of adjacent maxima, rho the median ratio. Flat subbands (m_k = 0) are
// skipped with a warning on stderr.
AlphaEstimate estimate_alpha(const std::vector<Image>& images, int levels);

struct StudyRow {
  std::string name;
  double entropy_score = 0.0;  // mu_E
  double vif_drop = 0.0;       // stealth VIF - attack VIF
};

struct StudyReport {
  Correlation corr;
  std::vector<StudyRow> rows;
};

StudyReport vif_drop_study(const std::vector<MetricReport>& stealth,
                           const std::vector<MetricReport>& success,
                           const std::vector<double>& entropy_scores,
                           const std::vector<std::string>& names = {});

struct ResultRow {
  std::string method;
  std::string model;
  double stealth_psnr = 0.0;
  double stealth_vif = 0.0;
  double atk_psnr = 0.0;
  double atk_ssim = 0.0;
  double atk_vif = 0.0;
  double bpp = 0.0;
};

// Mean/std (population) per (method, model) group; fixed column order.
// Returns full CSV lines including the header.
std::vector<std::string> summary_table(const std::vector<ResultRow>& rows);

// 6 significant digits, '.' decimal, no locale surprises.
std::string csv_number(double v);

}  // namespace tmla
