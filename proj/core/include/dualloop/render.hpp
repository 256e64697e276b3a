#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dualloop/grid_env.hpp"

namespace dualloop {

inline constexpr int kCellPixels = 32;

struct Rgb {
  std::uint8_t r, g, b;
};

Rgb tile_color(TileKind t);

/// 8-bit RGB PNG (color type 2, no interlace) with zlib level 9 IDAT.
std::vector<std::uint8_t> encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb);

struct RenderedMap {
  std::vector<std::uint8_t> png_bytes;
  std::string base64_payload;

  std::string data_url() const { return "data:image/png;base64," + base64_payload; }
};

/// 32 px cells, one fixed color per tile kind, consumed food drawn as floor, and a
/// bordered marker square for the entity.
RenderedMap render_map(const GridMap& map, const EntityState& entity);

}  // namespace dualloop
