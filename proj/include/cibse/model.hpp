// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cibse/blocks.hpp"
#include "cibse/checkpoint.hpp"
#include "cibse/graph.hpp"
#include "cibse/tensor.hpp"

namespace cibse::model {

struct Passthrough {};  // Upsample and Concat carry no weights

using LayerBlock = std::variant<Passthrough, nn::ConvBlock, nn::C2fBlock, nn::C2fCIBBlock, nn::SEBlock, nn::SPPFBlock,
                                nn::DetectHead>;

struct TensorSpec {
  std::string name;
  std::vector<int> dims;
  nn::ParamRole role;
};

enum class BindMode { Strict, Permissive };

/// A graph with concrete blocks. Weight names are `layer{index}.{sub-path}`.
class Model {
 public:
  /// All weights zero, batch norm identity.
  explicit Model(ModelGraph graph);

  /// Copies every required tensor from the checkpoint. Missing or mis-shaped
  /// tensors throw CheckpointError naming the path; unknown extra tensors
  /// throw too unless mode is Permissive.
  static Model bind(const ModelGraph& graph, const Checkpoint& weights, BindMode mode = BindMode::Strict);

  const ModelGraph& graph() const { return graph_; }
  const std::vector<LayerBlock>& blocks() const { return blocks_; }

  /// Raw head maps at strides 8/16/32. Input must be (n, 3, h, w) with h and
  /// w divisible by 32.
  std::vector<Tensor> forward(const Tensor& x) const;

  /// Visits every weight slot with its canonical name.
  void visit_params(const nn::ParamVisitor& fn);
  std::vector<TensorSpec> required_tensors() const;

 private:
  ModelGraph graph_;
  std::vector<LayerBlock> blocks_;
};

std::vector<TensorSpec> required_tensors(const ModelGraph& graph);

std::vector<Tensor> forward(const ModelGraph& graph, const Checkpoint& weights, const Tensor& x);

}  // namespace cibse::model
