// SPDX-License-Identifier: Apache-2.0
#include "cibse/synth.hpp"

#include <cmath>

#include "cibse/model.hpp"

namespace cibse {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ull;
  }
  return h;
}

Checkpoint synth_weights(const model::ModelGraph& graph, std::uint64_t seed) {
  constexpr float kClassBias = -4.6f;
  Checkpoint ckpt;
  for (const model::TensorSpec& spec : model::required_tensors(graph)) {
    CheckpointTensor t;
    std::size_t count = 1;
    for (int d : spec.dims) {
      t.dims.push_back(static_cast<std::uint32_t>(d));
      count *= static_cast<std::size_t>(d);
    }
    t.data.assign(count, 0.0f);
    switch (spec.role) {
      case nn::ParamRole::ConvWeight:
      case nn::ParamRole::FcWeight: {
        std::size_t fan_in = 1;
        for (std::size_t i = 1; i < spec.dims.size(); ++i) fan_in *= static_cast<std::size_t>(spec.dims[i]);
        const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        std::uint64_t state = seed ^ fnv1a64(spec.name);
        for (float& v : t.data) {
          const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
          v = static_cast<float>(bound * (2.0 * u - 1.0));
        }
        break;
      }
      case nn::ParamRole::ConvBias:
        if (spec.name.find(".cls") != std::string::npos) t.data.assign(count, kClassBias);
        break;
      case nn::ParamRole::BnGamma:
      case nn::ParamRole::BnVar: t.data.assign(count, 1.0f); break;
      case nn::ParamRole::BnBeta:
      case nn::ParamRole::BnMean:
      case nn::ParamRole::FcBias: break;
    }
    ckpt.emplace(spec.name, std::move(t));
  }
  return ckpt;
}

}  // namespace cibse
