// SPDX-License-Identifier: Apache-2.0
//
// Parameter and FLOP accounting.
//
// The default `Fused` convention counts the deployed, BN-folded network:
// every conv weight, one bias per output channel of each Conv-BN pair (the
// folded bias), explicit biases of the head output convs and SE layers, and
// the reg_max-element distribution projection of the head. `Unfused` counts
// BN gamma and beta separately instead of the folded bias. Running
// statistics are never counted.
#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "cibse/graph.hpp"
#include "cibse/tensor.hpp"

namespace cibse::model {

enum class ParamConvention { Fused, Unfused };

std::int64_t count_parameters(const ModelGraph& graph, ParamConvention convention = ParamConvention::Fused);

/// Multiply-accumulates of one convolution producing an out_h x out_w map.
std::int64_t conv_macs(const ConvParams& p, int out_h, int out_w);

/// Multiply-accumulates of every convolution at a square input of `imgsz`
/// pixels. The SE fully connected layers act on a 1x1 descriptor whose cost
/// does not depend on imgsz and are left out, so the count scales exactly
/// with imgsz^2. Throws ArgumentError unless imgsz % 32 == 0.
std::int64_t count_macs(const ModelGraph& graph, int imgsz);

/// 2 * MACs / 1e9.
double estimate_flops(const ModelGraph& graph, int imgsz = 640);

struct SummaryRow {
  int index = 0;
  LayerKind kind = LayerKind::Conv;
  std::vector<int> inputs;  // as declared, -1 = previous
  int out_channels = 0;
  std::int64_t params = 0;
};

std::vector<SummaryRow> summarize(const ModelGraph& graph, ParamConvention convention = ParamConvention::Fused);

void render_summary_text(std::ostream& os, const std::vector<SummaryRow>& rows);
void render_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

}  // namespace cibse::model
