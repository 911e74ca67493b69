// SPDX-License-Identifier: Apache-2.0
//
// Layer graphs for the four detector variants. Layer indices follow the
// baseline YOLOv8n numbering (0..22, Detect = 22). SE layers inserted by the
// attention variants get fresh indices 23, 24, 25 and sit directly after
// the C2f they refine in execution order; every consumer of that C2f reads
// the SE output instead.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cibse::model {

enum class Variant { Base, SEOnly, CIBOnly, CIBSE };
enum class LayerKind { Conv, C2f, C2fCIB, SE, SPPF, Upsample, Concat, Detect };

/// CLI / report name: yolov8n, yolov8n-se, yolov8n-c2fcib, cib-se-yolov8.
std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
std::string_view kind_name(LayerKind k);

struct LayerArgs {
  int c_out = 0;
  int kernel = 1;
  int stride = 1;
  int repeats = 1;
  bool shortcut = false;
  int reduction = 16;
};

struct LayerSpec {
  int index = 0;
  std::vector<int> inputs;  // -1 means the previous layer in execution order
  LayerKind kind = LayerKind::Conv;
  LayerArgs args;
};

struct ModelGraph {
  std::vector<LayerSpec> layers;  // execution order
  Variant variant = Variant::Base;
  int nc = 2;
  int reg_max = 16;
  float bn_eps = 1e-3f;
  std::array<int, 3> strides{8, 16, 32};

  /// Position in `layers` of the layer with this index; throws if absent.
  std::size_t position(int index) const;
  const LayerSpec& layer(int index) const { return layers[position(index)]; }
  /// Inputs of the layer at `pos`, with -1 resolved to a concrete index.
  std::vector<int> resolved_inputs(std::size_t pos) const;
  const LayerSpec& detect() const;
  std::array<int, 3> detect_inputs() const;
};

/// Throws ArgumentError for nc < 1.
ModelGraph build_variant(Variant variant, int nc = 2);

/// Checks ordering, the single Detect sink and channel arithmetic.
void validate(const ModelGraph& graph);

/// Output channel count of every layer, in execution order (0 for Detect).
std::vector<int> output_channels(const ModelGraph& graph);

}  // namespace cibse::model
