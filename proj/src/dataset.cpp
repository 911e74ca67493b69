// SPDX-License-Identifier: Apache-2.0
#include "cibse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "cibse/error.hpp"
#include "cibse/image.hpp"
#include "cibse/synth.hpp"

namespace cibse {
namespace fs = std::filesystem;

eval::GroundTruth parse_label_line(std::string_view line, int width, int height) {
  std::istringstream in{std::string(line)};
  std::vector<std::string> fields;
  for (std::string f; in >> f;) fields.push_back(f);
  if (fields.size() != 5) {
    throw DataError("expected 5 fields `class cx cy w h`, got " + std::to_string(fields.size()));
  }
  int cls = 0;
  std::size_t used = 0;
  try {
    cls = std::stoi(fields[0], &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != fields[0].size()) throw DataError("class id '" + fields[0] + "' is not an integer");
  if (cls < 0 || cls >= kNumClasses) throw DataError("class id " + std::to_string(cls) + " outside schema {0, 1}");
  std::array<double, 4> v{};
  for (int i = 0; i < 4; ++i) {
    try {
      v[i] = std::stod(fields[i + 1], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != fields[i + 1].size() || !std::isfinite(v[i])) {
      throw DataError("coordinate '" + fields[i + 1] + "' is not a number");
    }
    if (v[i] < 0.0 || v[i] > 1.0) throw DataError("coordinate " + fields[i + 1] + " outside [0, 1]");
  }
  const auto [cx, cy, w, h] = v;
  constexpr double kSlack = 1e-6;
  if (cx - w / 2 < -kSlack || cx + w / 2 > 1 + kSlack || cy - h / 2 < -kSlack || cy + h / 2 > 1 + kSlack) {
    throw DataError("box extends outside the image");
  }
  eval::GroundTruth g;
  g.class_id = cls;
  g.box = {static_cast<float>((cx - w / 2) * width), static_cast<float>((cy - h / 2) * height),
           static_cast<float>((cx + w / 2) * width), static_cast<float>((cy + h / 2) * height)};
  return g;
}

std::vector<Sample> load_dataset(const fs::path& root) {
  const fs::path image_dir = root / "images";
  const fs::path label_dir = root / "labels";
  if (!fs::is_directory(image_dir)) throw DataError("dataset: missing directory " + image_dir.string());

  std::map<std::string, fs::path> images;
  for (const auto& e : fs::directory_iterator(image_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") images[e.path().stem().string()] = e.path();
  }
  std::map<std::string, fs::path> labels;
  if (fs::is_directory(label_dir)) {
    for (const auto& e : fs::directory_iterator(label_dir)) {
      if (!e.is_regular_file() || e.path().extension() != ".txt") continue;
      const std::string stem = e.path().stem().string();
      if (!images.contains(stem)) throw DataError("dataset: label " + e.path().string() + " has no matching image");
      labels[stem] = e.path();
    }
  }

  std::vector<Sample> out;
  for (const auto& [stem, path] : images) {
    Sample s;
    s.stem = stem;
    s.image_path = path;
    const PpmHeader h = read_ppm_header(path);
    s.width = h.width;
    s.height = h.height;
    if (const auto it = labels.find(stem); it != labels.end()) {
      std::ifstream in(it->second);
      if (!in) throw DataError("dataset: cannot read " + it->second.string());
      std::string line;
      for (int lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          s.truths.push_back(parse_label_line(line, s.width, s.height));
        } catch (const DataError& e) {
          throw DataError(it->second.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

DatasetSplit split_dataset(std::vector<std::string> stems, std::array<double, 3> ratios, std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("split_dataset: ratios sum to " + std::to_string(sum));
  if (std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; })) {
    throw ArgumentError("split_dataset: negative ratio");
  }
  std::vector<std::pair<std::uint64_t, std::string>> keyed;
  keyed.reserve(stems.size());
  for (std::string& s : stems) {
    std::uint64_t state = seed ^ fnv1a64(s);
    keyed.emplace_back(splitmix64(state), std::move(s));
  }
  std::sort(keyed.begin(), keyed.end());

  const auto n = static_cast<double>(keyed.size());
  // the epsilon keeps products like 0.7 * 10 from flooring to 6
  const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * n + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * n + 1e-9));
  DatasetSplit split;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    auto& dst = i < n_train ? split.train : (i < n_train + n_val ? split.val : split.test);
    dst.push_back(std::move(keyed[i].second));
  }
  return split;
}

}  // namespace cibse
