// SPDX-License-Identifier: Apache-2.0
//
// Dataset layout: root/images/<stem>.ppm with optional root/labels/<stem>.txt.
// Label lines are `class cx cy w h`, coordinates normalized to [0, 1],
// class 0 = helmet, 1 = head.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cibse/metrics.hpp"

namespace cibse {

inline constexpr int kNumClasses = 2;

struct Sample {
  std::string stem;
  std::filesystem::path image_path;
  int width = 0;
  int height = 0;
  std::vector<eval::GroundTruth> truths;
};

/// Parses one label line against an image of the given size. Throws
/// DataError on a malformed line or a class outside the schema.
eval::GroundTruth parse_label_line(std::string_view line, int width, int height);

/// Samples sorted by stem. Images without a label file have no objects; a
/// label file without an image is an error.
std::vector<Sample> load_dataset(const std::filesystem::path& root);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Deterministic shuffle by a seeded hash of each stem, then sizes
/// floor(r0 * n), floor(r1 * n) and the remainder.
DatasetSplit split_dataset(std::vector<std::string> stems, std::array<double, 3> ratios = {0.7, 0.2, 0.1},
                           std::uint64_t seed = 0);

}  // namespace cibse
