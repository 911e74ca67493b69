// SPDX-License-Identifier: Apache-2.0
#include "cibse/tensor.hpp"

#include <sstream>

#include "cibse/error.hpp"

namespace cibse {

std::string Shape::str() const {
  std::ostringstream os;
  os << n << "x" << c << "x" << h << "x" << w;
  return os.str();
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("tensor: negative extent in shape " + shape.str());
  }
  data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("tensor: negative extent in shape " + shape.str());
  }
  if (data_.size() != shape.numel()) {
    throw ShapeError("tensor: shape " + shape.str() + " needs " + std::to_string(shape.numel()) +
                     " values, got " + std::to_string(data_.size()));
  }
}

BnParams BnParams::identity(int channels, float eps) {
  BnParams bn;
  bn.gamma.assign(channels, 1.0f);
  bn.beta.assign(channels, 0.0f);
  bn.mean.assign(channels, 0.0f);
  bn.var.assign(channels, 1.0f);
  bn.eps = eps;
  return bn;
}

}  // namespace cibse
