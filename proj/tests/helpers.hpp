#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "tmla/image.hpp"
#include "tmla/rng.hpp"

namespace testutil {

inline tmla::Image random_image(int h, int w, int c, std::uint64_t seed) {
  tmla::Image img(h, w, c);
  tmla::Rng rng(seed);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

inline double max_abs_diff(const tmla::Image& a, const tmla::Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

inline double rel_err(double got, double want) {
  const double denom = std::max(std::abs(got), std::abs(want));
  if (denom == 0.0) return 0.0;
  return std::abs(got - want) / denom;
}

// scratch directory under the build tree, unique per test binary
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tmla-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
