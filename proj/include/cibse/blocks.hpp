// SPDX-License-Identifier: Apache-2.0
//
// Composite blocks of the detector: Conv-BN-SiLU, bottleneck, C2f, CIB,
// C2fCIB, squeeze-and-excitation, SPPF and the decoupled anchor-free head.
//
// Blocks are plain value types. The make_* factories produce blocks with the
// right shapes, zero weights and identity batch norm; weights are filled in
// through visit_params, which enumerates every named tensor slot of a block.
// Slot names follow the canonical checkpoint naming, relative to a prefix.
#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cibse/tensor.hpp"

namespace cibse::nn {

/// Convolution without bias followed by batch norm and optional SiLU.
struct ConvBlock {
  ConvParams conv;
  BnParams bn;
  bool activate = true;
};

/// Two 3x3 ConvBlocks; adds the input back when shortcut is set.
struct Bottleneck {
  ConvBlock cv1;
  ConvBlock cv2;
  bool shortcut = true;
};

/// Compact inverted block: dw3x3, pw1x1 expand, dw3x3, pw1x1 project, dw3x3.
struct CIBBlock {
  std::array<ConvBlock, 5> stages;
  bool residual = true;
};

/// CSP block with a 1x1 split, a chain of inner blocks on the second half,
/// and a 1x1 fusion over every intermediate output.
template <class Inner>
struct CspBlock {
  ConvBlock cv1;
  std::vector<Inner> inner;
  ConvBlock cv2;

  int hidden() const { return cv1.conv.out_channels() / 2; }
};

using C2fBlock = CspBlock<Bottleneck>;
using C2fCIBBlock = CspBlock<CIBBlock>;

/// Squeeze-and-excitation. fc1 is (c/r, c, 1, 1), fc2 is (c, c/r, 1, 1);
/// both may carry a bias.
struct SEBlock {
  int channels = 0;
  int reduction = 16;
  ConvParams fc1;
  ConvParams fc2;
};

/// 1x1 reduce, three chained 5x5 max pools, concat of all four, 1x1 fuse.
struct SPPFBlock {
  ConvBlock cv1;
  ConvBlock cv2;
  int pool_kernel = 5;
};

/// Two 3x3 ConvBlocks and a biased 1x1 output convolution.
struct HeadBranch {
  ConvBlock first;
  ConvBlock second;
  ConvParams out;
};

struct HeadScale {
  HeadBranch box;
  HeadBranch cls;
};

/// Decoupled head: per scale, raw output channels are 4*reg_max box logits
/// followed by nc class logits.
struct DetectHead {
  std::vector<HeadScale> scales;
  int reg_max = 16;
  int nc = 2;
  std::array<int, 3> strides{8, 16, 32};

  int raw_channels() const { return 4 * reg_max + nc; }
};

// ---------------------------------------------------------------- factories

ConvBlock make_conv_block(int c_in, int c_out, int kernel, int stride = 1, int groups = 1, float bn_eps = 1e-3f);
Bottleneck make_bottleneck(int channels, bool shortcut, float bn_eps = 1e-3f);
/// Hidden width is floor(c_out * expansion), expanded to twice that inside.
CIBBlock make_cib(int c_in, int c_out, bool shortcut, double expansion = 0.5, float bn_eps = 1e-3f);
C2fBlock make_c2f(int c_in, int c_out, int repeats, bool shortcut, float bn_eps = 1e-3f);
/// Inner CIBs use expansion 1.0.
C2fCIBBlock make_c2f_cib(int c_in, int c_out, int repeats, bool shortcut, float bn_eps = 1e-3f);
SEBlock make_se(int channels, int reduction = 16, bool with_bias = false);
SPPFBlock make_sppf(int c_in, int c_out, int pool_kernel = 5, float bn_eps = 1e-3f);
DetectHead make_detect(int nc, std::span<const int> in_channels, int reg_max = 16, float bn_eps = 1e-3f);

// ----------------------------------------------------------------- forwards

Tensor conv_block_forward(const Tensor& x, const ConvBlock& b);
Tensor bottleneck_forward(const Tensor& x, const Bottleneck& b);
Tensor cib_forward(const Tensor& x, const CIBBlock& b);
Tensor c2f_forward(const Tensor& x, const C2fBlock& b);
Tensor c2f_forward(const Tensor& x, const C2fCIBBlock& b);
/// Per-channel excitation s = sigmoid(fc2(relu(fc1(gap(x))))), shape (n, c, 1, 1).
Tensor se_scale(const Tensor& x, const SEBlock& se);
Tensor se_forward(const Tensor& x, const SEBlock& se);
Tensor sppf_forward(const Tensor& x, const SPPFBlock& b);
std::vector<Tensor> detect_forward(std::span<const Tensor> features, const DetectHead& head);

// ----------------------------------------------------------- parameter slots

enum class ParamRole { ConvWeight, ConvBias, BnGamma, BnBeta, BnMean, BnVar, FcWeight, FcBias };

/// Whether the role is a learnable parameter (BN running statistics are not).
bool is_learnable(ParamRole role);

struct ParamSlot {
  std::string name;
  std::vector<int> dims;
  ParamRole role;
  std::span<float> values;
};

using ParamVisitor = std::function<void(const ParamSlot&)>;

void visit_params(ConvBlock& b, const std::string& prefix, const ParamVisitor& fn);
void visit_params(Bottleneck& b, const std::string& prefix, const ParamVisitor& fn);
void visit_params(CIBBlock& b, const std::string& prefix, const ParamVisitor& fn);
void visit_params(C2fBlock& b, const std::string& prefix, const ParamVisitor& fn);
void visit_params(C2fCIBBlock& b, const std::string& prefix, const ParamVisitor& fn);
void visit_params(SEBlock& b, const std::string& prefix, const ParamVisitor& fn);
void visit_params(SPPFBlock& b, const std::string& prefix, const ParamVisitor& fn);
void visit_params(DetectHead& b, const std::string& prefix, const ParamVisitor& fn);

}  // namespace cibse::nn
