// SPDX-License-Identifier: Apache-2.0
//
// 8-bit RGB images and the binary portable pixmap (P6, maxval 255) codec.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cibse {

/// Interleaved RGB, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);

  std::uint8_t at(int y, int x, int ch) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + ch]; }
  std::uint8_t& at(int y, int x, int ch) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + ch]; }
  bool operator==(const Image&) const = default;
};

struct PpmHeader {
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

/// Throws DataError on a malformed header or a maxval other than 255.
PpmHeader parse_ppm_header(std::span<const std::uint8_t> bytes);
Image parse_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Image& img);

Image read_ppm(const std::filesystem::path& path);
/// Reads only as much of the file as the header needs.
PpmHeader read_ppm_header(const std::filesystem::path& path);
void write_ppm(const Image& img, const std::filesystem::path& path);

}  // namespace cibse
