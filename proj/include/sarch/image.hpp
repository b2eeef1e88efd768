#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sarch::image {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major, interleaved R,G,B
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h, std::vector<std::uint8_t> px);
  GrayImage(int w, int h, std::uint8_t fill);

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

struct BilateralParams {
  double sigma_spatial = 2.0;
  double sigma_range = 25.0;
  int radius = 6;

  /// Window half-width defaults to ceil(3 * sigma_spatial).
  static BilateralParams with_default_radius(double sigma_spatial, double sigma_range);
};

struct OtsuResult {
  int threshold = 0;
  GrayImage binary;
};

/// BT.601 luminance, rounded to nearest.
GrayImage to_grayscale(const RgbImage& rgb);

/// Edge-preserving smoothing with Gaussian spatial and range kernels.
/// Borders replicate the nearest edge pixel.
GrayImage bilateral_filter(const GrayImage& img, const BilateralParams& params);

/// Global threshold maximizing between-class variance; ties go to the smallest t.
/// Pixels <= t map to 0, the rest to 255.
OtsuResult otsu_threshold(const GrayImage& img);

/// grayscale -> bilateral -> Otsu.
OtsuResult enhance(const RgbImage& rgb, const BilateralParams& params);

// 8-bit binary PGM (P5).
GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);
GrayImage decode_pgm(const std::string& bytes);
std::string encode_pgm(const GrayImage& img);

// PNG via libpng; any color type is expanded to RGB.
RgbImage read_png(const std::string& path);
void write_png(const GrayImage& img, const std::string& path);

/// Loads .png or .pgm by extension (grayscale is replicated to RGB).
RgbImage read_raster(const std::string& path);
void write_raster(const GrayImage& img, const std::string& path);

}  // namespace sarch::image
