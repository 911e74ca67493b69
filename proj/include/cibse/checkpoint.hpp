// SPDX-License-Identifier: Apache-2.0
//
// Named-tensor checkpoints and their portable binary container.
//
// Layout, all integers little-endian:
//   magic      8 bytes  "CIBSE1\0\0"
//   version    u32      1
//   count      u32      number of entries
//   entries, each:
//     name_len u16, name (UTF-8, name_len bytes)
//     rank     u8, dims rank x u32
//     data     product(dims) x f32 (IEEE-754)
// Entries are written in ascending name order, so saving is a function of
// the checkpoint's contents.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cibse/error.hpp"

namespace cibse {

struct CheckpointTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  bool operator==(const CheckpointTensor&) const = default;
};

using Checkpoint = std::map<std::string, CheckpointTensor>;

class CheckpointError : public Error {
 public:
  enum class Kind { Io, BadMagic, VersionMismatch, Truncated, DuplicateName, TrailingBytes, Invalid };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cibse
