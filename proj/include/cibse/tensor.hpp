// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cibse {

/// Extent of a dense NCHW tensor.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense 4-D float32 array in row-major (n, c, h, w) order.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  /// Throws ShapeError when data.size() != shape.numel().
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  const float* ptr() const { return data_.data(); }
  float* ptr() { return data_.data(); }

  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  float at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
  float& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }

  /// Pointer to the start of the (n, c) spatial plane.
  const float* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }
  float* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_{};
  std::vector<float> data_;
};

/// Convolution weights and geometry. Weight is (c_out, c_in / groups, k, k).
struct ConvParams {
  Tensor weight;
  std::vector<float> bias;  // empty when the convolution has no bias
  int stride = 1;
  int padding = 0;
  int groups = 1;

  int out_channels() const { return weight.n(); }
  int in_channels() const { return weight.c() * groups; }
  int kernel() const { return weight.h(); }
  bool has_bias() const { return !bias.empty(); }
};

/// Inference-time batch normalization statistics.
struct BnParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> mean;
  std::vector<float> var;
  float eps = 1e-3f;

  int channels() const { return static_cast<int>(gamma.size()); }
  /// gamma = 1, beta = 0, mean = 0, var = 1.
  static BnParams identity(int channels, float eps = 1e-3f);
};

}  // namespace cibse
