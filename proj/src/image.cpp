#include "sarch/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace sarch::image {

namespace {

void check_dims(int w, int h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("image dimensions must be positive");
}

bool ends_with(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace

GrayImage::GrayImage(int w, int h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  check_dims(w, h);
  if (pixels.size() != static_cast<std::size_t>(w) * h)
    throw std::invalid_argument("pixel count does not match width x height");
}

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), fill) {
  check_dims(w, h);
}

BilateralParams BilateralParams::with_default_radius(double sigma_spatial, double sigma_range) {
  return {sigma_spatial, sigma_range, std::max(1, static_cast<int>(std::ceil(3.0 * sigma_spatial)))};
}

GrayImage to_grayscale(const RgbImage& rgb) {
  check_dims(rgb.width, rgb.height);
  const std::size_t n = static_cast<std::size_t>(rgb.width) * rgb.height;
  if (rgb.data.size() != 3 * n) throw std::invalid_argument("RGB buffer size mismatch");
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = 0.299 * rgb.data[3 * i] + 0.587 * rgb.data[3 * i + 1] + 0.114 * rgb.data[3 * i + 2];
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
  }
  return GrayImage(rgb.width, rgb.height, std::move(out));
}

GrayImage bilateral_filter(const GrayImage& img, const BilateralParams& p) {
  check_dims(img.width, img.height);
  if (!(p.sigma_spatial > 0) || !(p.sigma_range > 0) || p.radius < 1)
    throw std::invalid_argument("bilateral parameters must be strictly positive");

  const int r = p.radius;
  const int side = 2 * r + 1;
  std::vector<double> spatial(static_cast<std::size_t>(side) * side);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      spatial[static_cast<std::size_t>(dy + r) * side + (dx + r)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma_spatial * p.sigma_spatial));
  std::array<double, 256> range{};
  for (int d = 0; d < 256; ++d)
    range[d] = std::exp(-(double(d) * d) / (2.0 * p.sigma_range * p.sigma_range));

  GrayImage out(img.width, img.height, std::uint8_t{0});
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int center = img.at(x, y);
      double num = 0, den = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, img.height - 1);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, img.width - 1);
          const int v = img.at(xx, yy);
          const double w =
              spatial[static_cast<std::size_t>(dy + r) * side + (dx + r)] * range[std::abs(v - center)];
          num += w * v;
          den += w;
        }
      }
      // den >= spatial(0,0) * range(0) = 1 from the center pixel.
      out.pixels[static_cast<std::size_t>(y) * img.width + x] =
          static_cast<std::uint8_t>(std::clamp(std::lround(num / den), 0L, 255L));
    }
  }
  return out;
}

OtsuResult otsu_threshold(const GrayImage& img) {
  if (img.pixels.empty()) throw std::invalid_argument("otsu_threshold on an empty image");

  std::array<std::int64_t, 256> hist{};
  for (auto v : img.pixels) ++hist[v];

  int distinct = 0, only = 0;
  for (int v = 0; v < 256; ++v)
    if (hist[v] > 0) ++distinct, only = v;
  if (distinct == 1) return {only, GrayImage(img.width, img.height, std::uint8_t{0})};

  std::int64_t total = 0, total_sum = 0;
  for (int v = 0; v < 256; ++v) total += hist[v], total_sum += std::int64_t(v) * hist[v];

  // sigma_b^2 * n^2 = (s0*c1 - s1*c0)^2 / (c0*c1); the n^2 factor does not move the argmax.
  int best_t = 0;
  double best = -1.0;
  std::int64_t c0 = 0, s0 = 0;
  for (int t = 0; t <= 254; ++t) {
    c0 += hist[t];
    s0 += std::int64_t(t) * hist[t];
    const std::int64_t c1 = total - c0, s1 = total_sum - s0;
    double score = 0.0;
    if (c0 > 0 && c1 > 0) {
      const double diff = double(s0) * double(c1) - double(s1) * double(c0);
      score = diff * diff / (double(c0) * double(c1));
    }
    if (score > best) best = score, best_t = t;
  }

  GrayImage binary(img.width, img.height, std::uint8_t{0});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    binary.pixels[i] = img.pixels[i] <= best_t ? 0 : 255;
  return {best_t, std::move(binary)};
}

OtsuResult enhance(const RgbImage& rgb, const BilateralParams& params) {
  return otsu_threshold(bilateral_filter(to_grayscale(rgb), params));
}

namespace {

// Skips whitespace and '#' comments in a PNM header, then reads an unsigned integer.
int read_pnm_int(std::istream& in) {
  int c = in.peek();
  while (c != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else {
      break;
    }
    c = in.peek();
  }
  int value = 0;
  if (!(in >> value)) throw std::runtime_error("malformed PGM header");
  return value;
}

}  // namespace

GrayImage decode_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5") throw std::runtime_error("not a binary PGM (P5) file");
  const int w = read_pnm_int(in);
  const int h = read_pnm_int(in);
  const int maxval = read_pnm_int(in);
  if (w <= 0 || h <= 0) throw std::runtime_error("PGM has non-positive dimensions");
  if (maxval != 255) throw std::runtime_error("only 8-bit PGM (maxval 255) is supported");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (static_cast<std::size_t>(in.gcount()) != px.size())
    throw std::runtime_error("PGM pixel data is truncated");
  return GrayImage(w, h, std::move(px));
}

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_pgm(ss.str());
}

void write_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const std::string bytes = encode_pgm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

RgbImage read_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw std::runtime_error("cannot read PNG '" + path + "': " + png.message);
  png.format = PNG_FORMAT_RGB;
  RgbImage rgb;
  rgb.width = static_cast<int>(png.width);
  rgb.height = static_cast<int>(png.height);
  rgb.data.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgb.data.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw std::runtime_error("cannot decode PNG '" + path + "': " + msg);
  }
  return rgb;
}

void write_png(const GrayImage& img, const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.pixels.data(), 0, nullptr))
    throw std::runtime_error("cannot write PNG '" + path + "': " + png.message);
}

RgbImage read_raster(const std::string& path) {
  if (ends_with(path, ".png")) return read_png(path);
  GrayImage g = read_pgm(path);
  RgbImage rgb{g.width, g.height, {}};
  rgb.data.reserve(g.pixels.size() * 3);
  for (auto v : g.pixels) rgb.data.insert(rgb.data.end(), {v, v, v});
  return rgb;
}

void write_raster(const GrayImage& img, const std::string& path) {
  if (ends_with(path, ".png"))
    write_png(img, path);
  else
    write_pgm(img, path);
}

}  // namespace sarch::image
