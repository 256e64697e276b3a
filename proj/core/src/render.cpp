#include "dualloop/render.hpp"

#include <stdexcept>

#include <zlib.h>

#include "dualloop/base64.hpp"

namespace dualloop {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5],
               std::span<const std::uint8_t> data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

constexpr Rgb kEntityFill{220, 40, 40};
constexpr Rgb kEntityBorder{20, 20, 20};
constexpr Rgb kGridLine{90, 90, 90};

}  // namespace

Rgb tile_color(TileKind t) {
  switch (t) {
    case TileKind::Goal: return {240, 200, 40};
    case TileKind::Food: return {60, 170, 70};
    case TileKind::Trap: return {40, 40, 160};
    case TileKind::Safe: return {225, 225, 215};
  }
  return {0, 0, 0};
}

std::vector<std::uint8_t> encode_png_rgb(int width, int height,
                                         std::span<const std::uint8_t> rgb) {
  if (width <= 0 || height <= 0 ||
      rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw std::invalid_argument("pixel buffer does not match image size");
  }
  std::vector<std::uint8_t> raw;
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  raw.reserve((stride + 1) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    const auto row = rgb.subspan(static_cast<std::size_t>(y) * stride, stride);
    raw.insert(raw.end(), row.begin(), row.end());
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw std::runtime_error("zlib compression failed");
  }
  packed.resize(packed_size);

  std::vector<std::uint8_t> png{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", {});
  return png;
}

RenderedMap render_map(const GridMap& map, const EntityState& entity) {
  constexpr int side = kGridSize * kCellPixels;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(side) * side * 3);
  auto paint = [&](int px, int py, Rgb c) {
    const std::size_t at = (static_cast<std::size_t>(py) * side + static_cast<std::size_t>(px)) * 3;
    rgb[at] = c.r;
    rgb[at + 1] = c.g;
    rgb[at + 2] = c.b;
  };
  for (int cy = 0; cy < kGridSize; ++cy) {
    for (int cx = 0; cx < kGridSize; ++cx) {
      TileKind kind = map.at({cx, cy});
      if (kind == TileKind::Food && entity.consumed_food.contains(Cell{cx, cy})) kind = TileKind::Safe;
      const Rgb fill = tile_color(kind);
      const bool is_entity = entity.position == Cell{cx, cy};
      for (int dy = 0; dy < kCellPixels; ++dy) {
        for (int dx = 0; dx < kCellPixels; ++dx) {
          Rgb c = fill;
          if (dx == 0 || dy == 0) c = kGridLine;
          if (is_entity && dx >= 8 && dx < 24 && dy >= 8 && dy < 24) {
            c = (dx == 8 || dx == 23 || dy == 8 || dy == 23) ? kEntityBorder : kEntityFill;
          }
          paint(cx * kCellPixels + dx, cy * kCellPixels + dy, c);
        }
      }
    }
  }
  RenderedMap out;
  out.png_bytes = encode_png_rgb(side, side, rgb);
  out.base64_payload = base64_encode(out.png_bytes);
  return out;
}

}  // namespace dualloop
