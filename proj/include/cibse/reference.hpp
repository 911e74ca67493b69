// SPDX-License-Identifier: Apache-2.0
//
// Serial, loop-for-loop reference versions of the kernels in kernels.hpp.
// They are written for obviousness, not speed, and share no code with the
// optimized kernels. Tests use them as oracles; the benchmark compares
// against them.
#pragma once

#include <span>

#include "cibse/tensor.hpp"

namespace cibse::reference {

Tensor conv2d(const Tensor& x, const ConvParams& p);
Tensor batch_norm(const Tensor& x, const BnParams& bn);
Tensor silu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor global_avg_pool(const Tensor& x);
Tensor maxpool2d(const Tensor& x, int kernel, int stride, int padding);
Tensor upsample_nearest2x(const Tensor& x);
Tensor concat_channels(std::span<const Tensor> xs);
Tensor slice_channels(const Tensor& x, int begin, int count);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale_channels(const Tensor& x, const Tensor& s);

}  // namespace cibse::reference
