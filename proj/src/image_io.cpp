#include "tmla/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace tmla {

namespace {

std::string lower_ext(const std::string& path) {
  auto pos = path.rfind('.');
  if (pos == std::string::npos) return "";
  std::string ext = path.substr(pos + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error(path + ": " + why);
}

std::uint8_t quantize(double v) {
  double q = std::round(v * 255.0);
  if (q < 0.0) q = 0.0;
  if (q > 255.0) q = 255.0;
  return static_cast<std::uint8_t>(q);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open for reading");

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
    fail(path, "not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "libpng error while reading");
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (bit_depth > 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported bit depth " + std::to_string(bit_depth) + " (8-bit only)");
  }
  if (w == 0 || h == 0) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "zero-size image");
  }

  // Normalize everything to 8-bit gray or RGB.
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int out_channels = static_cast<int>(png_get_channels(png, info));
  if (out_channels != 1 && out_channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported channel count " + std::to_string(out_channels));
  }

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> buf(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<int>(h), static_cast<int>(w), out_channels);
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t* row = buf.data() + static_cast<std::size_t>(y) * rowbytes;
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < out_channels; ++c)
        img.at(c, y, x) = row[x * out_channels + c] / 255.0;
  }
  return img;
}

void save_png(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    fail(path, "save_png: expected 1 or 3 channels");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng error while writing");
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[static_cast<std::size_t>(x) * img.channels + c] = quantize(img.at(c, y, x));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image load_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for reading");

  std::string magic;
  f >> magic;
  if (magic != "P5" && magic != "P6") fail(path, "expected binary PGM (P5) or PPM (P6)");
  const int channels = magic == "P5" ? 1 : 3;

  auto next_int = [&](const char* what) {
    // skip whitespace and '#' comments
    int ch = f.peek();
    while (ch != EOF && (std::isspace(ch) || ch == '#')) {
      if (ch == '#') {
        std::string line;
        std::getline(f, line);
      } else {
        f.get();
      }
      ch = f.peek();
    }
    long v = -1;
    f >> v;
    if (!f || v < 0) fail(path, std::string("bad PNM header field: ") + what);
    return v;
  };

  const long w = next_int("width");
  const long h = next_int("height");
  const long maxval = next_int("maxval");
  if (w <= 0 || h <= 0) fail(path, "zero-size image");
  if (maxval != 255) fail(path, "unsupported maxval " + std::to_string(maxval) + " (8-bit only)");
  f.get();  // single whitespace after header

  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * channels);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(f.gcount()) != buf.size()) fail(path, "truncated pixel data");

  Image img(static_cast<int>(h), static_cast<int>(w), channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0;
  return img;
}

void save_pnm(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    fail(path, "save_pnm: expected 1 or 3 channels");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  f << (img.channels == 1 ? "P5" : "P6") << "\n"
    << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(img.width) * img.height * img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        buf[(static_cast<std::size_t>(y) * img.width + x) * img.channels + c] =
            quantize(img.at(c, y, x));
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) fail(path, "write failed");
}

Image load_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "png") return load_png(path);
  if (ext == "ppm" || ext == "pgm" || ext == "pnm") return load_pnm(path);
  fail(path, "unsupported image format ." + ext);
}

void save_image(const std::string& path, const Image& img) {
  const std::string ext = lower_ext(path);
  if (ext == "png") return save_png(path, img);
  if (ext == "ppm" || ext == "pgm" || ext == "pnm") return save_pnm(path, img);
  fail(path, "unsupported image format ." + ext);
}

}  // namespace tmla
