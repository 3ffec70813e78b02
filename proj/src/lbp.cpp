#include "lfkit/lbp.hpp"

#include <fmt/format.h>

#include "lfkit/core.hpp"

namespace lfkit {

namespace {

// (dy, dx) clockwise from the top-left neighbour.
constexpr int kOffsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1},
                                {1, 1},   {1, 0},  {1, -1}, {0, -1}};

void check_geometry(int width, int height, const LbpGeometry& g) {
  if (g.cell_w <= 0 || g.cell_h <= 0 || width % g.cell_w != 0 || height % g.cell_h != 0) {
    throw Error(ErrorKind::bad_cell_geometry,
                fmt::format("{}x{} cells do not tile a {}x{} image", g.cell_w, g.cell_h, width,
                            height));
  }
}

}  // namespace

std::uint8_t lbp_code(const std::array<std::uint8_t, 9>& patch) {
  const std::uint8_t center = patch[4];
  unsigned code = 0;
  for (const auto& o : kOffsets) {
    code = (code << 1) | (patch[(1 + o[0]) * 3 + (1 + o[1])] >= center ? 1u : 0u);
  }
  return static_cast<std::uint8_t>(code);
}

std::size_t lbp_dimension(int width, int height, const LbpGeometry& geometry) {
  check_geometry(width, height, geometry);
  return static_cast<std::size_t>(width / geometry.cell_w) * (height / geometry.cell_h) * kLbpBins;
}

LbpFeature extract_lbp(const GrayImage& image, const LbpGeometry& geometry) {
  check_geometry(image.width, image.height, geometry);
  LbpFeature f;
  f.cell_w = geometry.cell_w;
  f.cell_h = geometry.cell_h;
  f.cells_x = image.width / geometry.cell_w;
  f.cells_y = image.height / geometry.cell_h;
  f.histogram.assign(static_cast<std::size_t>(f.cells_x) * f.cells_y * kLbpBins, 0);

  const int w = image.width;
  const std::uint8_t* px = image.pixels.data();
  for (int y = 1; y + 1 < image.height; ++y) {
    const int row_cell = (y / geometry.cell_h) * f.cells_x;
    for (int x = 1; x + 1 < w; ++x) {
      const std::uint8_t c = px[y * w + x];
      unsigned code = 0;
      for (const auto& o : kOffsets) {
        code = (code << 1) | (px[(y + o[0]) * w + (x + o[1])] >= c ? 1u : 0u);
      }
      const int cell = row_cell + x / geometry.cell_w;
      ++f.histogram[static_cast<std::size_t>(cell) * kLbpBins + code];
    }
  }
  return f;
}

}  // namespace lfkit
