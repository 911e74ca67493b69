// SPDX-License-Identifier: Apache-2.0
#include "cibse/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "cibse/error.hpp"

namespace cibse {
namespace {

// Skips whitespace and '#' comments (which run to end of line).
void skip_space(std::span<const std::uint8_t> b, std::size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n' && b[pos] != '\r') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
}

int read_uint(std::span<const std::uint8_t> b, std::size_t& pos, const char* field) {
  skip_space(b, pos);
  if (pos >= b.size() || !std::isdigit(b[pos])) throw DataError(std::string("ppm: missing ") + field);
  long v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos] - '0');
    if (v > 1'000'000) throw DataError(std::string("ppm: ") + field + " out of range");
    ++pos;
  }
  return static_cast<int>(v);
}

}  // namespace

Image::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

PpmHeader parse_ppm_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw DataError("ppm: not a binary pixmap (P6)");
  std::size_t pos = 2;
  PpmHeader h;
  h.width = read_uint(bytes, pos, "width");
  h.height = read_uint(bytes, pos, "height");
  const int maxval = read_uint(bytes, pos, "maxval");
  if (h.width < 1 || h.height < 1) throw DataError("ppm: empty image");
  if (maxval != 255) throw DataError("ppm: unsupported maxval " + std::to_string(maxval) + " (need 255)");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw DataError("ppm: missing whitespace after maxval");
  h.data_offset = pos + 1;
  return h;
}

Image parse_ppm(std::span<const std::uint8_t> bytes) {
  const PpmHeader h = parse_ppm_header(bytes);
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height * 3;
  if (bytes.size() - h.data_offset < need) {
    throw DataError("ppm: short payload, " + std::to_string(bytes.size() - h.data_offset) + " of " +
                    std::to_string(need) + " bytes");
  }
  Image img;
  img.width = h.width;
  img.height = h.height;
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
                 bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset + need));
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("ppm: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_ppm(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

PpmHeader read_ppm_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("ppm: cannot open " + path.string());
  std::vector<std::uint8_t> head(4096);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  try {
    return parse_ppm_header(head);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("ppm: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace cibse
