// SPDX-License-Identifier: Apache-2.0
#include "cibse/blocks.hpp"

#include <algorithm>
#include <string>

#include "cibse/error.hpp"
#include "cibse/kernels.hpp"

namespace cibse::nn {
namespace {

void require_channels(const char* block, const Tensor& x, int expected) {
  if (x.c() != expected) {
    throw ShapeError(std::string(block) + ": input has " + std::to_string(x.c()) + " channels, expected " +
                     std::to_string(expected));
  }
}

ConvParams make_conv(int c_in, int c_out, int kernel, int stride, int groups, bool bias) {
  if (c_in < 1 || c_out < 1 || groups < 1 || c_in % groups != 0 || c_out % groups != 0) {
    throw ShapeError("conv: channels " + std::to_string(c_in) + "->" + std::to_string(c_out) +
                     " incompatible with groups " + std::to_string(groups));
  }
  ConvParams p;
  p.weight = Tensor({c_out, c_in / groups, kernel, kernel});
  if (bias) p.bias.assign(static_cast<std::size_t>(c_out), 0.0f);
  p.stride = stride;
  p.padding = kernel / 2;
  p.groups = groups;
  return p;
}

std::vector<int> weight_dims(const ConvParams& p) {
  const Shape& s = p.weight.shape();
  return {s.n, s.c, s.h, s.w};
}

void visit_biased_conv(ConvParams& p, const std::string& prefix, const ParamVisitor& fn) {
  fn({prefix + ".weight", weight_dims(p), ParamRole::ConvWeight, p.weight.data()});
  if (p.has_bias()) fn({prefix + ".bias", {p.out_channels()}, ParamRole::ConvBias, p.bias});
}

void visit_fc(ConvParams& p, const std::string& prefix, const ParamVisitor& fn) {
  fn({prefix + ".weight", {p.weight.n(), p.weight.c()}, ParamRole::FcWeight, p.weight.data()});
  if (p.has_bias()) fn({prefix + ".bias", {p.out_channels()}, ParamRole::FcBias, p.bias});
}

template <class Inner>
CspBlock<Inner> make_csp(int c_in, int c_out, int repeats, float bn_eps, auto make_inner) {
  if (repeats < 0) throw ShapeError("c2f: negative repeat count");
  const int hidden = c_out / 2;
  CspBlock<Inner> b;
  b.cv1 = make_conv_block(c_in, 2 * hidden, 1, 1, 1, bn_eps);
  for (int i = 0; i < repeats; ++i) b.inner.push_back(make_inner(hidden));
  b.cv2 = make_conv_block((2 + repeats) * hidden, c_out, 1, 1, 1, bn_eps);
  return b;
}

template <class Inner, class F>
Tensor csp_forward(const char* name, const Tensor& x, const CspBlock<Inner>& b, F inner_forward) {
  require_channels(name, x, b.cv1.conv.in_channels());
  const Tensor y = conv_block_forward(x, b.cv1);
  const int hidden = b.hidden();
  std::vector<Tensor> parts;
  parts.reserve(2 + b.inner.size());
  parts.push_back(slice_channels(y, 0, hidden));
  parts.push_back(slice_channels(y, hidden, hidden));
  for (const Inner& inner : b.inner) parts.push_back(inner_forward(parts.back(), inner));
  return conv_block_forward(concat_channels(parts), b.cv2);
}

template <class Inner>
void visit_csp(CspBlock<Inner>& b, const std::string& prefix, const ParamVisitor& fn) {
  visit_params(b.cv1, prefix + ".cv1", fn);
  for (std::size_t i = 0; i < b.inner.size(); ++i) visit_params(b.inner[i], prefix + ".m" + std::to_string(i), fn);
  visit_params(b.cv2, prefix + ".cv2", fn);
}

}  // namespace

ConvBlock make_conv_block(int c_in, int c_out, int kernel, int stride, int groups, float bn_eps) {
  ConvBlock b;
  b.conv = make_conv(c_in, c_out, kernel, stride, groups, false);
  b.bn = BnParams::identity(c_out, bn_eps);
  return b;
}

Bottleneck make_bottleneck(int channels, bool shortcut, float bn_eps) {
  return {make_conv_block(channels, channels, 3, 1, 1, bn_eps), make_conv_block(channels, channels, 3, 1, 1, bn_eps),
          shortcut};
}

CIBBlock make_cib(int c_in, int c_out, bool shortcut, double expansion, float bn_eps) {
  const int mid = static_cast<int>(c_out * expansion);
  if (mid < 1) throw ShapeError("cib: hidden width rounds to zero");
  CIBBlock b;
  b.stages[0] = make_conv_block(c_in, c_in, 3, 1, c_in, bn_eps);
  b.stages[1] = make_conv_block(c_in, 2 * mid, 1, 1, 1, bn_eps);
  b.stages[2] = make_conv_block(2 * mid, 2 * mid, 3, 1, 2 * mid, bn_eps);
  b.stages[3] = make_conv_block(2 * mid, c_out, 1, 1, 1, bn_eps);
  b.stages[4] = make_conv_block(c_out, c_out, 3, 1, c_out, bn_eps);
  b.residual = shortcut && c_in == c_out;
  return b;
}

C2fBlock make_c2f(int c_in, int c_out, int repeats, bool shortcut, float bn_eps) {
  return make_csp<Bottleneck>(c_in, c_out, repeats, bn_eps,
                              [&](int hidden) { return make_bottleneck(hidden, shortcut, bn_eps); });
}

C2fCIBBlock make_c2f_cib(int c_in, int c_out, int repeats, bool shortcut, float bn_eps) {
  return make_csp<CIBBlock>(c_in, c_out, repeats, bn_eps,
                            [&](int hidden) { return make_cib(hidden, hidden, shortcut, 1.0, bn_eps); });
}

SEBlock make_se(int channels, int reduction, bool with_bias) {
  if (reduction < 1 || channels % reduction != 0) {
    throw ShapeError("se: " + std::to_string(channels) + " channels not divisible by reduction " +
                     std::to_string(reduction));
  }
  const int hidden = channels / reduction;
  SEBlock se;
  se.channels = channels;
  se.reduction = reduction;
  se.fc1 = make_conv(channels, hidden, 1, 1, 1, with_bias);
  se.fc2 = make_conv(hidden, channels, 1, 1, 1, with_bias);
  return se;
}

SPPFBlock make_sppf(int c_in, int c_out, int pool_kernel, float bn_eps) {
  const int hidden = c_in / 2;
  return {make_conv_block(c_in, hidden, 1, 1, 1, bn_eps), make_conv_block(4 * hidden, c_out, 1, 1, 1, bn_eps),
          pool_kernel};
}

DetectHead make_detect(int nc, std::span<const int> in_channels, int reg_max, float bn_eps) {
  if (in_channels.size() != 3) throw ShapeError("detect: expected 3 input scales");
  if (nc < 1) throw ShapeError("detect: class count must be positive");
  const int box_width = std::max({16, in_channels[0] / 4, 4 * reg_max});
  const int cls_width = std::max(in_channels[0], std::min(nc, 100));
  DetectHead head;
  head.reg_max = reg_max;
  head.nc = nc;
  for (const int c : in_channels) {
    HeadScale s;
    s.box = {make_conv_block(c, box_width, 3, 1, 1, bn_eps), make_conv_block(box_width, box_width, 3, 1, 1, bn_eps),
             make_conv(box_width, 4 * reg_max, 1, 1, 1, true)};
    s.cls = {make_conv_block(c, cls_width, 3, 1, 1, bn_eps), make_conv_block(cls_width, cls_width, 3, 1, 1, bn_eps),
             make_conv(cls_width, nc, 1, 1, 1, true)};
    head.scales.push_back(std::move(s));
  }
  return head;
}

Tensor conv_block_forward(const Tensor& x, const ConvBlock& b) {
  Tensor y = conv2d(x, fold_batchnorm(b.conv, b.bn));
  return b.activate ? silu(y) : y;
}

Tensor bottleneck_forward(const Tensor& x, const Bottleneck& b) {
  require_channels("bottleneck", x, b.cv1.conv.in_channels());
  Tensor y = conv_block_forward(conv_block_forward(x, b.cv1), b.cv2);
  return b.shortcut && y.shape() == x.shape() ? add(x, y) : y;
}

Tensor cib_forward(const Tensor& x, const CIBBlock& b) {
  require_channels("cib", x, b.stages[0].conv.in_channels());
  Tensor y = x;
  for (const ConvBlock& stage : b.stages) y = conv_block_forward(y, stage);
  return b.residual ? add(x, y) : y;
}

Tensor c2f_forward(const Tensor& x, const C2fBlock& b) { return csp_forward("c2f", x, b, bottleneck_forward); }

Tensor c2f_forward(const Tensor& x, const C2fCIBBlock& b) { return csp_forward("c2fcib", x, b, cib_forward); }

Tensor se_scale(const Tensor& x, const SEBlock& se) {
  require_channels("se", x, se.channels);
  const Tensor squeezed = global_avg_pool(x);
  return sigmoid(conv2d(relu(conv2d(squeezed, se.fc1)), se.fc2));
}

Tensor se_forward(const Tensor& x, const SEBlock& se) { return scale_channels(x, se_scale(x, se)); }

Tensor sppf_forward(const Tensor& x, const SPPFBlock& b) {
  require_channels("sppf", x, b.cv1.conv.in_channels());
  const int k = b.pool_kernel;
  const Tensor y = conv_block_forward(x, b.cv1);
  const Tensor p1 = maxpool2d(y, k, 1, k / 2);
  const Tensor p2 = maxpool2d(p1, k, 1, k / 2);
  const Tensor p3 = maxpool2d(p2, k, 1, k / 2);
  return conv_block_forward(concat_channels({y, p1, p2, p3}), b.cv2);
}

std::vector<Tensor> detect_forward(std::span<const Tensor> features, const DetectHead& head) {
  if (features.size() != head.scales.size()) {
    throw ShapeError("detect: got " + std::to_string(features.size()) + " feature maps, expected " +
                     std::to_string(head.scales.size()));
  }
  std::vector<Tensor> raw;
  raw.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const HeadScale& s = head.scales[i];
    require_channels("detect", features[i], s.box.first.conv.in_channels());
    auto branch = [&](const HeadBranch& br) {
      return conv2d(conv_block_forward(conv_block_forward(features[i], br.first), br.second), br.out);
    };
    raw.push_back(concat_channels({branch(s.box), branch(s.cls)}));
  }
  return raw;
}

bool is_learnable(ParamRole role) { return role != ParamRole::BnMean && role != ParamRole::BnVar; }

void visit_params(ConvBlock& b, const std::string& prefix, const ParamVisitor& fn) {
  const int c = b.conv.out_channels();
  fn({prefix + ".conv.weight", weight_dims(b.conv), ParamRole::ConvWeight, b.conv.weight.data()});
  if (b.conv.has_bias()) fn({prefix + ".conv.bias", {c}, ParamRole::ConvBias, b.conv.bias});
  fn({prefix + ".bn.gamma", {c}, ParamRole::BnGamma, b.bn.gamma});
  fn({prefix + ".bn.beta", {c}, ParamRole::BnBeta, b.bn.beta});
  fn({prefix + ".bn.mean", {c}, ParamRole::BnMean, b.bn.mean});
  fn({prefix + ".bn.var", {c}, ParamRole::BnVar, b.bn.var});
}

void visit_params(Bottleneck& b, const std::string& prefix, const ParamVisitor& fn) {
  visit_params(b.cv1, prefix + ".cv1", fn);
  visit_params(b.cv2, prefix + ".cv2", fn);
}

void visit_params(CIBBlock& b, const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t i = 0; i < b.stages.size(); ++i) visit_params(b.stages[i], prefix + ".cv" + std::to_string(i), fn);
}

void visit_params(C2fBlock& b, const std::string& prefix, const ParamVisitor& fn) { visit_csp(b, prefix, fn); }

void visit_params(C2fCIBBlock& b, const std::string& prefix, const ParamVisitor& fn) { visit_csp(b, prefix, fn); }

void visit_params(SEBlock& b, const std::string& prefix, const ParamVisitor& fn) {
  visit_fc(b.fc1, prefix + ".fc1", fn);
  visit_fc(b.fc2, prefix + ".fc2", fn);
}

void visit_params(SPPFBlock& b, const std::string& prefix, const ParamVisitor& fn) {
  visit_params(b.cv1, prefix + ".cv1", fn);
  visit_params(b.cv2, prefix + ".cv2", fn);
}

void visit_params(DetectHead& b, const std::string& prefix, const ParamVisitor& fn) {
  for (std::size_t i = 0; i < b.scales.size(); ++i) {
    for (auto [tag, branch] : {std::pair{"box", &b.scales[i].box}, std::pair{"cls", &b.scales[i].cls}}) {
      const std::string p = prefix + "." + tag + std::to_string(i);
      visit_params(branch->first, p + ".0", fn);
      visit_params(branch->second, p + ".1", fn);
      visit_biased_conv(branch->out, p + ".2", fn);
    }
  }
}

}  // namespace cibse::nn
