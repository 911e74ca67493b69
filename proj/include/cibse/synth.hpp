// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

#include "cibse/checkpoint.hpp"
#include "cibse/graph.hpp"

namespace cibse {

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::string_view text);

/// Deterministic weights for every tensor of the graph. Each tensor draws
/// from its own splitmix64 stream seeded with seed ^ fnv1a64(name), so a
/// tensor's values depend only on its name. Conv and FC weights are
/// uniform in +-sqrt(1 / fan_in); batch norm is identity (var 1); class
/// head biases are -4.6 and all other biases 0.
Checkpoint synth_weights(const model::ModelGraph& graph, std::uint64_t seed);

}  // namespace cibse
