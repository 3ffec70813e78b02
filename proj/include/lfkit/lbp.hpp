#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lfkit/image.hpp"

namespace lfkit {

inline constexpr int kLbpBins = 256;

struct LbpGeometry {
  int cell_w = 10;
  int cell_h = 10;
  bool operator==(const LbpGeometry&) const = default;
};

// Row-major 3x3 patch. Neighbours are read clockwise from the top-left and
// packed most-significant bit first; a neighbour >= the centre sets its bit.
std::uint8_t lbp_code(const std::array<std::uint8_t, 9>& patch);

struct LbpFeature {
  int cells_x = 0;
  int cells_y = 0;
  int cell_w = 0;
  int cell_h = 0;
  std::vector<std::uint32_t> histogram;  // cells_x * cells_y * 256, cells row-major

  std::size_t dimension() const { return histogram.size(); }
};

// Codes every interior pixel (the 1-pixel border is skipped) and histograms the
// codes per cell. Throws bad_cell_geometry unless the cells tile the image.
LbpFeature extract_lbp(const GrayImage& image, const LbpGeometry& geometry = {});

std::size_t lbp_dimension(int width, int height, const LbpGeometry& geometry);

}  // namespace lfkit
