// SPDX-License-Identifier: Apache-2.0
#include "cibse/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace cibse {
namespace {

constexpr std::array<std::uint8_t, 8> kMagic{'C', 'I', 'B', 'S', 'E', '1', 0, 0};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const std::string& context) const {
    if (remaining() < n) {
      throw CheckpointError(CheckpointError::Kind::Truncated,
                            "checkpoint truncated: " + context + " needs " + std::to_string(n) + " bytes, " +
                                std::to_string(remaining()) + " left");
    }
  }
  std::uint8_t u8(const std::string& ctx) {
    need(1, ctx);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const std::string& ctx) {
    need(2, ctx);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const std::string& ctx) {
    need(4, ctx);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const std::string& ctx) {
    need(n, ctx);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.size()));
  for (const auto& [name, t] : ckpt) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw CheckpointError(CheckpointError::Kind::Invalid, "checkpoint: name too long: " + name.substr(0, 64));
    }
    if (t.dims.size() > std::numeric_limits<std::uint8_t>::max()) {
      throw CheckpointError(CheckpointError::Kind::Invalid, "checkpoint: rank too large for " + name);
    }
    std::size_t count = 1;
    for (std::uint32_t d : t.dims) count *= d;
    if (count != t.data.size()) {
      throw CheckpointError(CheckpointError::Kind::Invalid, "checkpoint: dims of " + name + " describe " +
                                                                std::to_string(count) + " values, data has " +
                                                                std::to_string(t.data.size()));
    }
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) put_u32(out, d);
    for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.remaining() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CheckpointError(CheckpointError::Kind::BadMagic, "checkpoint: bad magic");
  }
  r.take(kMagic.size(), "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                          "checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("entry count");
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "entry " + std::to_string(i);
    const std::uint16_t name_len = r.u16(where + " name length");
    const auto name_bytes = r.take(name_len, where + " name");
    const std::string name(name_bytes.begin(), name_bytes.end());
    const std::string ctx = "entry '" + name + "'";
    CheckpointTensor t;
    const std::uint8_t rank = r.u8(ctx + " rank");
    std::uint64_t values = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32(ctx + " dims"));
      values *= t.dims.back();
    }
    if (values > r.remaining() / 4) {
      throw CheckpointError(CheckpointError::Kind::Truncated,
                            "checkpoint truncated: " + ctx + " data declares " + std::to_string(values) +
                                " floats, " + std::to_string(r.remaining()) + " bytes left");
    }
    const auto payload = r.take(static_cast<std::size_t>(values) * 4, ctx + " data");
    t.data.resize(static_cast<std::size_t>(values));
    for (std::size_t k = 0; k < t.data.size(); ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[4 * k + b]) << (8 * b);
      t.data[k] = std::bit_cast<float>(bits);
    }
    if (!ckpt.emplace(name, std::move(t)).second) {
      throw CheckpointError(CheckpointError::Kind::DuplicateName, "checkpoint: duplicate tensor name '" + name + "'");
    }
  }
  if (r.remaining() != 0) {
    throw CheckpointError(CheckpointError::Kind::TrailingBytes,
                          "checkpoint: " + std::to_string(r.remaining()) + " trailing bytes after last entry");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "checkpoint: cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "checkpoint: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace cibse
