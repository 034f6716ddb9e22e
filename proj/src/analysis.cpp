#include "tmla/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "tmla/wavelet.hpp"

namespace tmla {

AlphaEstimate estimate_alpha(const std::vector<Image>& images, int levels) {
  if (images.empty()) throw std::invalid_argument("estimate_alpha: empty manifest");
  if (levels < 1) throw std::invalid_argument("estimate_alpha: levels must be >= 1");

  const FilterSpec& haar = FilterSpec::preset("haar");
  AlphaEstimate est;
  est.levels = levels;

  for (std::size_t idx = 0; idx < images.size(); ++idx) {
    const WaveletPyramid pyr = dwt2(images[idx], haar, levels);

    // m[0..levels-1]: detail scales finest->coarsest; m[levels]: approx band
    std::vector<double> m(static_cast<std::size_t>(levels) + 1, 0.0);
    for (const ChannelPyramid& cp : pyr.ch) {
      for (int k = 1; k <= levels; ++k) {
        const DetailBand& d = cp.detail[static_cast<std::size_t>(k - 1)];
        double& mk = m[static_cast<std::size_t>(k - 1)];
        for (const Plane* p : {&d.lh, &d.hl, &d.hh})
          for (double v : p->v) mk = std::max(mk, std::abs(v));
      }
      double& ma = m[static_cast<std::size_t>(levels)];
      for (double v : cp.approx.v) ma = std::max(ma, std::abs(v));
    }

    std::vector<double> ratios;
    for (int k = 0; k < levels; ++k) {
      if (m[static_cast<std::size_t>(k)] == 0.0) {
        std::fprintf(stderr, "estimate_alpha: image %zu has a flat subband at scale %d, "
                             "ratio skipped\n", idx, k + 1);
        continue;
      }
      ratios.push_back(m[static_cast<std::size_t>(k + 1)] / m[static_cast<std::size_t>(k)]);
    }
    if (ratios.empty()) {
      std::fprintf(stderr, "estimate_alpha: image %zu has no usable ratios, skipped\n", idx);
      continue;
    }
    std::sort(ratios.begin(), ratios.end());
    const std::size_t n = ratios.size();
    const double med = n % 2 == 1 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
    est.per_image_ratio.push_back(med);
  }

  if (est.per_image_ratio.empty())
    throw std::invalid_argument("estimate_alpha: no image produced a usable ratio");
  double s = 0.0;
  for (double r : est.per_image_ratio) s += r;
  est.alpha_emp = s / static_cast<double>(est.per_image_ratio.size());
  return est;
}

StudyReport vif_drop_study(const std::vector<MetricReport>& stealth,
                           const std::vector<MetricReport>& success,
                           const std::vector<double>& entropy_scores,
                           const std::vector<std::string>& names) {
  if (stealth.size() != success.size() || stealth.size() != entropy_scores.size())
    throw std::invalid_argument("vif_drop_study: length mismatch");
  if (!names.empty() && names.size() != stealth.size())
    throw std::invalid_argument("vif_drop_study: names length mismatch");

  StudyReport rep;
  std::vector<double> drops(stealth.size());
  for (std::size_t i = 0; i < stealth.size(); ++i) {
    drops[i] = relative_vif_drop(stealth[i].vif, success[i].vif);
    StudyRow row;
    row.name = names.empty() ? "image" + std::to_string(i) : names[i];
    row.entropy_score = entropy_scores[i];
    row.vif_drop = drops[i];
    rep.rows.push_back(std::move(row));
  }
  rep.corr = correlation(entropy_scores, drops);
  return rep;
}

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> summary_table(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summary_table: no rows");

  struct Acc {
    std::vector<double> v[6];
  };
  std::map<std::pair<std::string, std::string>, Acc> groups;
  for (const ResultRow& r : rows) {
    Acc& a = groups[{r.method, r.model}];
    const double vals[6] = {r.stealth_psnr, r.stealth_vif, r.atk_psnr,
                            r.atk_ssim,     r.atk_vif,     r.bpp};
    for (int i = 0; i < 6; ++i) a.v[i].push_back(vals[i]);
  }

  std::vector<std::string> lines;
  lines.push_back("# std is the population standard deviation (divisor N)");
  lines.push_back(
      "method,model,stat,stealth_psnr,stealth_vif,atk_psnr,atk_ssim,atk_vif,bpp");
  for (const auto& [key, acc] : groups) {
    double mean[6], sd[6];
    for (int i = 0; i < 6; ++i) {
      const auto& v = acc.v[i];
      double s = 0.0;
      for (double x : v) s += x;
      mean[i] = s / static_cast<double>(v.size());
      double q = 0.0;
      for (double x : v) q += (x - mean[i]) * (x - mean[i]);
      sd[i] = std::sqrt(q / static_cast<double>(v.size()));
    }
    auto emit = [&](const char* stat, const double* vals) {
      std::string line = key.first + "," + key.second + "," + stat;
      for (int i = 0; i < 6; ++i) line += "," + csv_number(vals[i]);
      lines.push_back(std::move(line));
    };
    emit("mean", mean);
    emit("std", sd);
  }
  return lines;
}

}  // namespace tmla
