// SPDX-License-Identifier: Apache-2.0
// Helpers shared by the unit tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "cibse/blocks.hpp"
#include "cibse/tensor.hpp"

namespace cibse::testing {

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  Tensor t(s);
  for (float& v : t.data()) v = dist(rng);
  return t;
}

inline std::vector<float> random_vector(std::size_t n, std::mt19937_64& rng, float lo, float hi) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

inline BnParams random_bn(int c, std::mt19937_64& rng) {
  BnParams bn;
  bn.gamma = random_vector(c, rng, 0.5f, 1.5f);
  bn.beta = random_vector(c, rng, -0.5f, 0.5f);
  bn.mean = random_vector(c, rng, -0.5f, 0.5f);
  bn.var = random_vector(c, rng, 0.2f, 2.0f);
  return bn;
}

/// Fills every slot of a block: weights uniform in +-1/sqrt(fan_in), batch
/// norm statistics random but well-conditioned.
template <class Block>
void randomize(Block& b, std::mt19937_64& rng) {
  nn::visit_params(b, "x", [&](const nn::ParamSlot& slot) {
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < slot.dims.size(); ++i) fan_in *= static_cast<std::size_t>(slot.dims[i]);
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    float lo = -bound;
    float hi = bound;
    switch (slot.role) {
      case nn::ParamRole::BnGamma: lo = 0.5f; hi = 1.5f; break;
      case nn::ParamRole::BnBeta:
      case nn::ParamRole::BnMean:
      case nn::ParamRole::ConvBias:
      case nn::ParamRole::FcBias: lo = -0.5f; hi = 0.5f; break;
      case nn::ParamRole::BnVar: lo = 0.2f; hi = 2.0f; break;
      default: break;
    }
    std::uniform_real_distribution<float> dist(lo, hi);
    for (float& v : slot.values) v = dist(rng);
  });
}

/// max |a - b| / (1 + max |b|); infinite on a shape mismatch.
inline double rel_error(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) return INFINITY;
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    diff = std::max(diff, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    scale = std::max(scale, std::abs(static_cast<double>(b.data()[i])));
  }
  return diff / (1.0 + scale);
}

}  // namespace cibse::testing
