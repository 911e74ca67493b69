// SPDX-License-Identifier: Apache-2.0
#include "cibse/model.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "cibse/error.hpp"
#include "cibse/kernels.hpp"

namespace cibse::model {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string layer_prefix(int index) { return "layer" + std::to_string(index); }

std::string dims_str(std::span<const int> dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

std::string dims_str(std::span<const std::uint32_t> dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

}  // namespace

Model::Model(ModelGraph graph) : graph_(std::move(graph)) {
  validate(graph_);
  const std::vector<int> out_ch = output_channels(graph_);
  auto channels_of = [&](int index) { return index == -1 ? 3 : out_ch[graph_.position(index)]; };
  const float eps = graph_.bn_eps;
  blocks_.reserve(graph_.layers.size());
  for (std::size_t pos = 0; pos < graph_.layers.size(); ++pos) {
    const LayerSpec& l = graph_.layers[pos];
    const std::vector<int> ins = graph_.resolved_inputs(pos);
    const int c_in = channels_of(ins.front());
    const LayerArgs& a = l.args;
    switch (l.kind) {
      case LayerKind::Conv: blocks_.emplace_back(nn::make_conv_block(c_in, a.c_out, a.kernel, a.stride, 1, eps)); break;
      case LayerKind::C2f: blocks_.emplace_back(nn::make_c2f(c_in, a.c_out, a.repeats, a.shortcut, eps)); break;
      case LayerKind::C2fCIB:
        blocks_.emplace_back(nn::make_c2f_cib(c_in, a.c_out, a.repeats, a.shortcut, eps));
        break;
      case LayerKind::SE: blocks_.emplace_back(nn::make_se(c_in, a.reduction, false)); break;
      case LayerKind::SPPF: blocks_.emplace_back(nn::make_sppf(c_in, a.c_out, a.kernel, eps)); break;
      case LayerKind::Upsample:
      case LayerKind::Concat: blocks_.emplace_back(Passthrough{}); break;
      case LayerKind::Detect: {
        std::array<int, 3> ch{};
        for (std::size_t i = 0; i < 3; ++i) ch[i] = channels_of(ins[i]);
        nn::DetectHead head = nn::make_detect(graph_.nc, ch, graph_.reg_max, eps);
        head.strides = graph_.strides;
        blocks_.emplace_back(std::move(head));
        break;
      }
    }
  }
}

void Model::visit_params(const nn::ParamVisitor& fn) {
  for (std::size_t pos = 0; pos < blocks_.size(); ++pos) {
    const std::string prefix = layer_prefix(graph_.layers[pos].index);
    std::visit(Overloaded{[](Passthrough&) {}, [&](auto& block) { nn::visit_params(block, prefix, fn); }},
               blocks_[pos]);
  }
}

std::vector<TensorSpec> Model::required_tensors() const {
  Model copy = *this;
  std::vector<TensorSpec> specs;
  copy.visit_params([&](const nn::ParamSlot& s) { specs.push_back({s.name, s.dims, s.role}); });
  return specs;
}

Model Model::bind(const ModelGraph& graph, const Checkpoint& weights, BindMode mode) {
  Model m(graph);
  std::set<std::string> used;
  m.visit_params([&](const nn::ParamSlot& slot) {
    const auto it = weights.find(slot.name);
    if (it == weights.end()) {
      throw CheckpointError(CheckpointError::Kind::Invalid, "bind: missing tensor " + slot.name);
    }
    const CheckpointTensor& t = it->second;
    const bool same = t.dims.size() == slot.dims.size() &&
                      std::equal(t.dims.begin(), t.dims.end(), slot.dims.begin(),
                                 [](std::uint32_t a, int b) { return static_cast<int>(a) == b; });
    if (!same || t.data.size() != slot.values.size()) {
      throw CheckpointError(CheckpointError::Kind::Invalid, "bind: tensor " + slot.name + " has shape " +
                                                                dims_str(t.dims) + ", expected " +
                                                                dims_str(slot.dims));
    }
    std::copy(t.data.begin(), t.data.end(), slot.values.begin());
    used.insert(slot.name);
  });
  if (mode == BindMode::Strict && used.size() != weights.size()) {
    for (const auto& [name, _] : weights) {
      if (!used.contains(name)) {
        throw CheckpointError(CheckpointError::Kind::Invalid, "bind: unexpected tensor " + name);
      }
    }
  }
  return m;
}

std::vector<Tensor> Model::forward(const Tensor& x) const {
  if (x.c() != 3) throw ShapeError("forward: input must have 3 channels, got " + std::to_string(x.c()));
  if (x.h() < 32 || x.w() < 32 || x.h() % 32 != 0 || x.w() % 32 != 0) {
    throw ShapeError("forward: input size " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                     " is not a positive multiple of 32");
  }
  std::vector<Tensor> outputs(graph_.layers.size());
  auto input = [&](int index) -> const Tensor& { return index == -1 ? x : outputs[graph_.position(index)]; };

  for (std::size_t pos = 0; pos < graph_.layers.size(); ++pos) {
    const LayerSpec& l = graph_.layers[pos];
    const std::vector<int> ins = graph_.resolved_inputs(pos);
    const Tensor& first = input(ins.front());
    switch (l.kind) {
      case LayerKind::Conv: outputs[pos] = nn::conv_block_forward(first, std::get<nn::ConvBlock>(blocks_[pos])); break;
      case LayerKind::C2f: outputs[pos] = nn::c2f_forward(first, std::get<nn::C2fBlock>(blocks_[pos])); break;
      case LayerKind::C2fCIB: outputs[pos] = nn::c2f_forward(first, std::get<nn::C2fCIBBlock>(blocks_[pos])); break;
      case LayerKind::SE: outputs[pos] = nn::se_forward(first, std::get<nn::SEBlock>(blocks_[pos])); break;
      case LayerKind::SPPF: outputs[pos] = nn::sppf_forward(first, std::get<nn::SPPFBlock>(blocks_[pos])); break;
      case LayerKind::Upsample: outputs[pos] = upsample_nearest2x(first); break;
      case LayerKind::Concat: {
        std::vector<Tensor> parts;
        for (int in : ins) parts.push_back(input(in));
        outputs[pos] = concat_channels(parts);
        break;
      }
      case LayerKind::Detect: {
        const std::array<Tensor, 3> feats{input(ins[0]), input(ins[1]), input(ins[2])};
        return nn::detect_forward(feats, std::get<nn::DetectHead>(blocks_[pos]));
      }
    }
  }
  throw ArgumentError("forward: graph has no Detect layer");
}

std::vector<TensorSpec> required_tensors(const ModelGraph& graph) { return Model(graph).required_tensors(); }

std::vector<Tensor> forward(const ModelGraph& graph, const Checkpoint& weights, const Tensor& x) {
  return Model::bind(graph, weights).forward(x);
}

}  // namespace cibse::model
