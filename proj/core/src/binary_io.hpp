#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>

namespace dualloop::detail {

inline void write_f64_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> buf{};
  for (int i = 0; i < 8; ++i) buf[static_cast<std::size_t>(i)] = static_cast<char>((bits >> (8 * i)) & 0xFFU);
  out.write(buf.data(), buf.size());
}

inline void write_f64_le(std::ostream& out, std::span<const double> values) {
  for (double v : values) write_f64_le(out, v);
}

/// False on short read.
inline bool read_f64_le(std::istream& in, double& v) {
  std::array<char, 8> buf{};
  if (!in.read(buf.data(), buf.size())) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[static_cast<std::size_t>(i)])) << (8 * i);
  }
  v = std::bit_cast<double>(bits);
  return true;
}

}  // namespace dualloop::detail
