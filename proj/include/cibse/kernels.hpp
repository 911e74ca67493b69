// SPDX-License-Identifier: Apache-2.0
//
// Numeric kernels over NCHW tensors. Every kernel is a pure function of its
// inputs. The heavy ones (convolution, pooling) are parallelized with OpenMP
// over independent output planes, so each output element is produced by a
// single thread in a fixed summation order and results are bit-identical
// regardless of thread count. Reductions accumulate in double precision.
//
// Plain serial versions of the same operations live in reference.hpp and are
// used as oracles by the tests and as the baseline by the benchmark.
#pragma once

#include <span>
#include <vector>

#include "cibse/tensor.hpp"

namespace cibse {

/// Cross-correlation with zero padding. Output spatial size is
/// floor((h + 2*pad - k) / stride) + 1 per axis.
Tensor conv2d(const Tensor& x, const ConvParams& p);

/// Returns params whose convolution equals batch_norm(conv2d(x, p), bn).
ConvParams fold_batchnorm(const ConvParams& p, const BnParams& bn);

/// y = gamma * (x - mean) / sqrt(var + eps) + beta, per channel.
Tensor batch_norm(const Tensor& x, const BnParams& bn);

Tensor silu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);

/// (n, c, h, w) -> (n, c, 1, 1) spatial mean.
Tensor global_avg_pool(const Tensor& x);

/// Window maximum; padded positions never win.
Tensor maxpool2d(const Tensor& x, int kernel, int stride, int padding);

Tensor upsample_nearest2x(const Tensor& x);

/// Concatenates along channels, preserving input order.
Tensor concat_channels(std::span<const Tensor> xs);
Tensor concat_channels(std::initializer_list<Tensor> xs);

/// Channels [begin, begin + count) of x.
Tensor slice_channels(const Tensor& x, int begin, int count);

/// Elementwise sum of two same-shaped tensors.
Tensor add(const Tensor& a, const Tensor& b);

/// x * s where s is (n, c, 1, 1), broadcast over the spatial plane.
Tensor scale_channels(const Tensor& x, const Tensor& s);

}  // namespace cibse
