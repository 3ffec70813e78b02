#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace lfkit {

inline constexpr int kCropWidth = 60;
inline constexpr int kCropHeight = 70;

// Decoded 8-bit raster, 1 (gray) or 3 (RGB, interleaved) channels, row-major.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

// round(0.299 R + 0.587 G + 0.114 B), in integer arithmetic.
inline std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

GrayImage to_gray(const Raster& raster);

// PNG, or portable any-map P2/P3/P5/P6 with maxval 255. Throws undecodable_image.
Raster decode_image(const std::filesystem::path& path);
Raster decode_image_bytes(std::string_view bytes, std::string_view name = "<memory>");

// Decodes and converts; strict mode throws wrong_dimensions unless 60x70.
GrayImage load_gray(const std::filesystem::path& path, bool strict = true);

void save_pgm(const std::filesystem::path& path, const GrayImage& image);
std::string encode_pgm(const GrayImage& image);
void save_png(const std::filesystem::path& path, const Raster& raster);

}  // namespace lfkit
