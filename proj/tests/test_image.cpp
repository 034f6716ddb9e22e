#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "helpers.hpp"
#include "tmla/image.hpp"
#include "tmla/image_io.hpp"

using namespace tmla;
using testutil::max_abs_diff;
using testutil::random_image;
using testutil::scratch_dir;

TEST_CASE("pgm load scales bytes by 1/255") {
  auto dir = scratch_dir("image-pgm");
  const auto path = (dir / "t.pgm").string();
  {
    std::ofstream f(path, std::ios::binary);
    f << "P5\n2 2\n255\n";
    const unsigned char bytes[4] = {0, 255, 128, 64};
    f.write(reinterpret_cast<const char*>(bytes), 4);
  }
  Image img = load_image(path);
  CHECK(img.height == 2);
  CHECK(img.width == 2);
  CHECK(img.channels == 1);
  CHECK(img.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(img.at(0, 0, 1) == doctest::Approx(1.0));
  CHECK(img.at(0, 1, 0) == doctest::Approx(128.0 / 255.0));
  CHECK(img.at(0, 1, 1) == doctest::Approx(64.0 / 255.0));
}

TEST_CASE("1x1 white RGB png round trip") {
  auto dir = scratch_dir("image-png1");
  const auto path = (dir / "w.png").string();
  Image white(1, 1, 3, 1.0);
  save_image(path, white);
  Image back = load_image(path);
  CHECK(back.channels == 3);
  CHECK(back.at(0, 0, 0) == doctest::Approx(1.0));
  CHECK(back.at(1, 0, 0) == doctest::Approx(1.0));
  CHECK(back.at(2, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("save/load round trip within half a quantization step") {
  auto dir = scratch_dir("image-rt");
  for (int c : {1, 3}) {
    Image img = random_image(13, 9, c, 100 + static_cast<std::uint64_t>(c));
    for (const char* ext : {"png", c == 1 ? "pgm" : "ppm"}) {
      const auto path = (dir / ("rt." + std::string(ext))).string();
      save_image(path, img);
      Image back = load_image(path);
      CHECK(max_abs_diff(img, back) <= 1.0 / 510.0 + 1e-12);
    }
  }
}

TEST_CASE("load errors") {
  auto dir = scratch_dir("image-err");
  CHECK_THROWS(load_image((dir / "missing.png").string()));
  CHECK_THROWS(load_image((dir / "unsupported.tiff").string()));
  {
    std::ofstream f((dir / "bad.pgm").string(), std::ios::binary);
    f << "P5\n2 2\n65535\n";  // 16-bit
    f.write("\0\0\0\0\0\0\0\0", 8);
  }
  CHECK_THROWS(load_image((dir / "bad.pgm").string()));
  {
    std::ofstream f((dir / "trunc.pgm").string(), std::ios::binary);
    f << "P5\n4 4\n255\n";
    f.write("abc", 3);
  }
  CHECK_THROWS(load_image((dir / "trunc.pgm").string()));
}

TEST_CASE("grayscale weights") {
  Image rgb(1, 2, 3);
  // pixel 0: white, pixel 1: pure red
  rgb.at(0, 0, 0) = 1.0;
  rgb.at(1, 0, 0) = 1.0;
  rgb.at(2, 0, 0) = 1.0;
  rgb.at(0, 0, 1) = 1.0;
  Image gray = to_grayscale(rgb);
  CHECK(gray.channels == 1);
  CHECK(gray.at(0, 0, 0) == doctest::Approx(1.0));
  CHECK(gray.at(0, 0, 1) == doctest::Approx(0.299));
}

TEST_CASE("grayscale idempotent on single channel") {
  Image g = random_image(5, 7, 1, 3);
  Image out = to_grayscale(g);
  CHECK(max_abs_diff(g, out) == 0.0);
}

TEST_CASE("diff_map") {
  Image a = random_image(4, 4, 1, 7);
  SUBCASE("identical images give zero map") {
    Image d = diff_map(a, a, 50.0);
    for (double v : d.data) CHECK(v == 0.0);
  }
  SUBCASE("gain scales and clips") {
    Image b = a;
    for (double& v : b.data) v += 0.01;
    Image d = diff_map(a, b, 50.0);
    for (double v : d.data) CHECK(v == doctest::Approx(0.5));
    Image b2 = a;
    for (double& v : b2.data) v += 0.1;
    Image d2 = diff_map(a, b2, 50.0);
    for (double v : d2.data) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("shape mismatch throws") {
    Image b(4, 5, 1);
    CHECK_THROWS(diff_map(a, b, 50.0));
  }
  SUBCASE("non-positive gain rejected") { CHECK_THROWS(diff_map(a, a, 0.0)); }
}

TEST_CASE("clip01 subgradient convention") {
  CHECK(clip01_subgrad(-0.1) == 0.0);
  CHECK(clip01_subgrad(1.1) == 0.0);
  CHECK(clip01_subgrad(0.0) == 0.5);
  CHECK(clip01_subgrad(1.0) == 0.5);
  CHECK(clip01_subgrad(0.5) == 1.0);
}
