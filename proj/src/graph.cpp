// SPDX-License-Identifier: Apache-2.0
#include "cibse/graph.hpp"

#include <algorithm>
#include <string>

#include "cibse/error.hpp"

namespace cibse::model {
namespace {

LayerSpec layer(int index, std::vector<int> inputs, LayerKind kind, LayerArgs args = {}) {
  return {index, std::move(inputs), kind, args};
}

LayerArgs conv(int c_out, int kernel, int stride) { return {.c_out = c_out, .kernel = kernel, .stride = stride}; }

LayerArgs csp(int c_out, int repeats, bool shortcut) {
  return {.c_out = c_out, .repeats = repeats, .shortcut = shortcut};
}

// YOLOv8n: width multiplier 0.25, depth multiplier 0.33 already applied.
std::vector<LayerSpec> yolov8n_layers() {
  using K = LayerKind;
  return {
      layer(0, {-1}, K::Conv, conv(16, 3, 2)),
      layer(1, {-1}, K::Conv, conv(32, 3, 2)),
      layer(2, {-1}, K::C2f, csp(32, 1, true)),
      layer(3, {-1}, K::Conv, conv(64, 3, 2)),
      layer(4, {-1}, K::C2f, csp(64, 2, true)),
      layer(5, {-1}, K::Conv, conv(128, 3, 2)),
      layer(6, {-1}, K::C2f, csp(128, 2, true)),
      layer(7, {-1}, K::Conv, conv(256, 3, 2)),
      layer(8, {-1}, K::C2f, csp(256, 1, true)),
      layer(9, {-1}, K::SPPF, {.c_out = 256, .kernel = 5}),
      layer(10, {-1}, K::Upsample),
      layer(11, {-1, 6}, K::Concat),
      layer(12, {-1}, K::C2f, csp(128, 1, false)),
      layer(13, {-1}, K::Upsample),
      layer(14, {-1, 4}, K::Concat),
      layer(15, {-1}, K::C2f, csp(64, 1, false)),
      layer(16, {-1}, K::Conv, conv(64, 3, 2)),
      layer(17, {-1, 12}, K::Concat),
      layer(18, {-1}, K::C2f, csp(128, 1, false)),
      layer(19, {-1}, K::Conv, conv(128, 3, 2)),
      layer(20, {-1, 9}, K::Concat),
      layer(21, {-1}, K::C2f, csp(256, 1, false)),
      layer(22, {15, 18, 21}, K::Detect),
  };
}

// Inserts an SE layer right after `target`; explicit references to `target`
// from later layers are redirected to the SE layer.
void insert_se_after(std::vector<LayerSpec>& layers, int target, int se_index) {
  auto it = std::find_if(layers.begin(), layers.end(), [&](const LayerSpec& l) { return l.index == target; });
  const auto pos = static_cast<std::size_t>(it - layers.begin());
  for (std::size_t i = pos + 1; i < layers.size(); ++i) {
    for (int& in : layers[i].inputs) {
      if (in == target) in = se_index;
    }
  }
  layers.insert(layers.begin() + static_cast<std::ptrdiff_t>(pos) + 1,
                layer(se_index, {-1}, LayerKind::SE, {.reduction = 16}));
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Base: return "yolov8n";
    case Variant::SEOnly: return "yolov8n-se";
    case Variant::CIBOnly: return "yolov8n-c2fcib";
    case Variant::CIBSE: return "cib-se-yolov8";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : {Variant::Base, Variant::SEOnly, Variant::CIBOnly, Variant::CIBSE}) {
    if (variant_name(v) == name) return v;
  }
  return std::nullopt;
}

std::string_view kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "Conv";
    case LayerKind::C2f: return "C2f";
    case LayerKind::C2fCIB: return "C2fCIB";
    case LayerKind::SE: return "SE";
    case LayerKind::SPPF: return "SPPF";
    case LayerKind::Upsample: return "Upsample";
    case LayerKind::Concat: return "Concat";
    case LayerKind::Detect: return "Detect";
  }
  return "?";
}

std::size_t ModelGraph::position(int index) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].index == index) return i;
  }
  throw ArgumentError("graph: no layer with index " + std::to_string(index));
}

std::vector<int> ModelGraph::resolved_inputs(std::size_t pos) const {
  std::vector<int> out;
  for (int in : layers[pos].inputs) {
    if (in == -1) {
      if (pos == 0) {
        out.push_back(-1);  // the network input
      } else {
        out.push_back(layers[pos - 1].index);
      }
    } else {
      out.push_back(in);
    }
  }
  return out;
}

const LayerSpec& ModelGraph::detect() const {
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::Detect) return l;
  }
  throw ArgumentError("graph: no Detect layer");
}

std::array<int, 3> ModelGraph::detect_inputs() const {
  const LayerSpec& d = detect();
  if (d.inputs.size() != 3) throw ArgumentError("graph: Detect must consume three scales");
  return {d.inputs[0], d.inputs[1], d.inputs[2]};
}

ModelGraph build_variant(Variant variant, int nc) {
  if (nc < 1) throw ArgumentError("build_variant: class count must be at least 1");
  ModelGraph g;
  g.variant = variant;
  g.nc = nc;
  g.layers = yolov8n_layers();
  if (variant == Variant::CIBOnly || variant == Variant::CIBSE) {
    for (LayerSpec& l : g.layers) {
      if (l.index == 6 || l.index == 8) l.kind = LayerKind::C2fCIB;
    }
  }
  if (variant == Variant::SEOnly || variant == Variant::CIBSE) {
    insert_se_after(g.layers, 15, 23);
    insert_se_after(g.layers, 18, 24);
    insert_se_after(g.layers, 21, 25);
  }
  validate(g);
  return g;
}

std::vector<int> output_channels(const ModelGraph& graph) {
  std::vector<int> out(graph.layers.size(), 0);
  auto channels_of = [&](int index) {
    if (index == -1) return 3;
    return out[graph.position(index)];
  };
  for (std::size_t pos = 0; pos < graph.layers.size(); ++pos) {
    const LayerSpec& l = graph.layers[pos];
    const std::vector<int> ins = graph.resolved_inputs(pos);
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::C2f:
      case LayerKind::C2fCIB:
      case LayerKind::SPPF: out[pos] = l.args.c_out; break;
      case LayerKind::SE:
      case LayerKind::Upsample: out[pos] = channels_of(ins.at(0)); break;
      case LayerKind::Concat:
        for (int in : ins) out[pos] += channels_of(in);
        break;
      case LayerKind::Detect: out[pos] = 0; break;
    }
  }
  return out;
}

void validate(const ModelGraph& graph) {
  if (graph.layers.empty()) throw ArgumentError("graph: no layers");
  int detects = 0;
  std::vector<int> seen;
  for (std::size_t pos = 0; pos < graph.layers.size(); ++pos) {
    const LayerSpec& l = graph.layers[pos];
    if (std::find(seen.begin(), seen.end(), l.index) != seen.end()) {
      throw ArgumentError("graph: duplicate layer index " + std::to_string(l.index));
    }
    if (l.inputs.empty()) throw ArgumentError("graph: layer " + std::to_string(l.index) + " has no inputs");
    for (int in : l.inputs) {
      if (in == -1) continue;
      if (std::find(seen.begin(), seen.end(), in) == seen.end()) {
        throw ArgumentError("graph: layer " + std::to_string(l.index) + " reads layer " + std::to_string(in) +
                            " which does not precede it");
      }
    }
    const bool multi = l.kind == LayerKind::Concat || l.kind == LayerKind::Detect;
    if (!multi && l.inputs.size() != 1) {
      throw ArgumentError("graph: layer " + std::to_string(l.index) + " takes exactly one input");
    }
    if (l.kind == LayerKind::Detect) {
      ++detects;
      if (l.inputs.size() != 3) throw ArgumentError("graph: Detect must consume three scales");
      if (pos + 1 != graph.layers.size()) throw ArgumentError("graph: Detect must be the last layer");
    }
    seen.push_back(l.index);
  }
  if (detects != 1) throw ArgumentError("graph: expected exactly one Detect layer, found " + std::to_string(detects));

  // channel arithmetic: SE reduction and C2f halves must divide evenly
  const std::vector<int> ch = output_channels(graph);
  for (std::size_t pos = 0; pos < graph.layers.size(); ++pos) {
    const LayerSpec& l = graph.layers[pos];
    if (l.kind == LayerKind::SE && (l.args.reduction < 1 || ch[pos] % l.args.reduction != 0)) {
      throw ArgumentError("graph: SE layer " + std::to_string(l.index) + " channels not divisible by reduction");
    }
    if ((l.kind == LayerKind::C2f || l.kind == LayerKind::C2fCIB) && l.args.c_out % 2 != 0) {
      throw ArgumentError("graph: C2f layer " + std::to_string(l.index) + " needs an even channel count");
    }
  }
}

}  // namespace cibse::model
