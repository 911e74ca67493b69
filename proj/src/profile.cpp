// SPDX-License-Identifier: Apache-2.0
#include "cibse/profile.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>

#include "cibse/error.hpp"
#include "cibse/model.hpp"

namespace cibse::model {
namespace {

std::int64_t slot_params(const nn::ParamSlot& s, ParamConvention convention) {
  const auto n = static_cast<std::int64_t>(s.values.size());
  switch (s.role) {
    case nn::ParamRole::ConvWeight:
    case nn::ParamRole::ConvBias:
    case nn::ParamRole::FcWeight:
    case nn::ParamRole::FcBias:
    case nn::ParamRole::BnGamma: return n;  // gamma doubles as the folded bias in the fused count
    case nn::ParamRole::BnBeta: return convention == ParamConvention::Unfused ? n : 0;
    case nn::ParamRole::BnMean:
    case nn::ParamRole::BnVar: return 0;
  }
  return 0;
}

std::int64_t layer_params(LayerBlock& block, const LayerSpec& spec, int reg_max, ParamConvention convention) {
  std::int64_t total = 0;
  std::visit(
      [&](auto& b) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(b)>, Passthrough>) {
          nn::visit_params(b, "", [&](const nn::ParamSlot& s) { total += slot_params(s, convention); });
        }
      },
      block);
  if (spec.kind == LayerKind::Detect) total += reg_max;  // fixed distribution projection
  return total;
}

std::int64_t weight_macs(auto& block, std::int64_t area) {
  std::int64_t macs = 0;
  nn::visit_params(block, "", [&](const nn::ParamSlot& s) {
    if (s.role == nn::ParamRole::ConvWeight) macs += static_cast<std::int64_t>(s.values.size()) * area;
  });
  return macs;
}

}  // namespace

std::int64_t conv_macs(const ConvParams& p, int out_h, int out_w) {
  return static_cast<std::int64_t>(p.weight.numel()) * out_h * out_w;
}

std::int64_t count_parameters(const ModelGraph& graph, ParamConvention convention) {
  const auto rows = summarize(graph, convention);
  return std::accumulate(rows.begin(), rows.end(), std::int64_t{0},
                         [](std::int64_t acc, const SummaryRow& r) { return acc + r.params; });
}

std::int64_t count_macs(const ModelGraph& graph, int imgsz) {
  if (imgsz < 32 || imgsz % 32 != 0) {
    throw ArgumentError("estimate_flops: image size " + std::to_string(imgsz) + " is not a multiple of 32");
  }
  Model model(graph);
  auto blocks = model.blocks();  // mutable copy for visiting
  std::vector<std::int64_t> side(graph.layers.size(), 0);
  auto side_of = [&](int index) -> std::int64_t { return index == -1 ? imgsz : side[graph.position(index)]; };

  std::int64_t macs = 0;
  for (std::size_t pos = 0; pos < graph.layers.size(); ++pos) {
    const LayerSpec& l = graph.layers[pos];
    const std::vector<int> ins = graph.resolved_inputs(pos);
    const std::int64_t in_side = side_of(ins.front());
    switch (l.kind) {
      case LayerKind::Conv: {
        const std::int64_t pad = l.args.kernel / 2;
        side[pos] = (in_side + 2 * pad - l.args.kernel) / l.args.stride + 1;
        break;
      }
      case LayerKind::Upsample: side[pos] = 2 * in_side; break;
      default: side[pos] = in_side; break;
    }
    if (l.kind == LayerKind::Detect) {
      auto& head = std::get<nn::DetectHead>(blocks[pos]);
      for (std::size_t s = 0; s < head.scales.size(); ++s) {
        const std::int64_t area = side_of(ins[s]) * side_of(ins[s]);
        for (nn::HeadBranch* br : {&head.scales[s].box, &head.scales[s].cls}) {
          macs += weight_macs(br->first, area) + weight_macs(br->second, area);
          macs += conv_macs(br->out, static_cast<int>(side_of(ins[s])), static_cast<int>(side_of(ins[s])));
        }
      }
      continue;
    }
    const std::int64_t area = side[pos] * side[pos];
    std::visit(
        [&](auto& b) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(b)>, Passthrough>) macs += weight_macs(b, area);
        },
        blocks[pos]);
  }
  return macs;
}

double estimate_flops(const ModelGraph& graph, int imgsz) {
  return 2.0 * static_cast<double>(count_macs(graph, imgsz)) / 1e9;
}

std::vector<SummaryRow> summarize(const ModelGraph& graph, ParamConvention convention) {
  Model model(graph);
  auto blocks = model.blocks();
  const std::vector<int> channels = output_channels(graph);
  std::vector<SummaryRow> rows;
  for (std::size_t pos = 0; pos < graph.layers.size(); ++pos) {
    const LayerSpec& l = graph.layers[pos];
    int out = channels[pos];
    if (l.kind == LayerKind::Detect) out = 4 * graph.reg_max + graph.nc;
    rows.push_back({l.index, l.kind, l.inputs, out, layer_params(blocks[pos], l, graph.reg_max, convention)});
  }
  return rows;
}

namespace {
std::string inputs_str(const std::vector<int>& inputs) {
  std::string s;
  for (std::size_t i = 0; i < inputs.size(); ++i) s += (i ? "," : "") + std::to_string(inputs[i]);
  return s;
}
}  // namespace

void render_summary_text(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << std::left << std::setw(6) << "index" << std::setw(10) << "kind" << std::setw(12) << "inputs" << std::right
     << std::setw(8) << "out_ch" << std::setw(12) << "params" << '\n';
  for (const SummaryRow& r : rows) {
    os << std::left << std::setw(6) << r.index << std::setw(10) << kind_name(r.kind) << std::setw(12)
       << inputs_str(r.inputs) << std::right << std::setw(8) << r.out_channels << std::setw(12) << r.params << '\n';
  }
}

void render_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "index,kind,inputs,out_channels,params\n";
  for (const SummaryRow& r : rows) {
    os << r.index << ',' << kind_name(r.kind) << ",\"" << inputs_str(r.inputs) << "\"," << r.out_channels << ','
       << r.params << '\n';
  }
}

}  // namespace cibse::model
