// SPDX-License-Identifier: Apache-2.0
#include "cibse/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cibse/error.hpp"

namespace cibse {
namespace {

std::string dim_mismatch(const char* op, const char* dim, int got, int want) {
  return std::string(op) + ": dimension " + dim + " is " + std::to_string(got) + ", expected " +
         std::to_string(want);
}

int pooled_extent(int in, int kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

constexpr int kOcBlock = 4;  // output channels per register tile
constexpr int kTileW = 8;    // output columns per register tile

double sigmoid_d(double v) { return 1.0 / (1.0 + std::exp(-v)); }

template <class F>
Tensor map_elementwise(const Tensor& x, F f) {
  Tensor out(x.shape());
  const float* src = x.ptr();
  float* dst = out.ptr();
  const auto count = static_cast<std::ptrdiff_t>(x.numel());
#pragma omp parallel for schedule(static) if (count > 65536)
  for (std::ptrdiff_t i = 0; i < count; ++i) dst[i] = f(src[i]);
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& x, const ConvParams& p) {
  const Shape& in = x.shape();
  const Shape& ws = p.weight.shape();
  if (p.groups < 1) throw ShapeError("conv2d: groups must be positive");
  if (p.stride < 1) throw ShapeError("conv2d: stride must be positive");
  if (p.padding < 0) throw ShapeError("conv2d: padding must be non-negative");
  if (ws.h != ws.w) throw ShapeError(dim_mismatch("conv2d", "kernel width", ws.w, ws.h));
  if (ws.n % p.groups != 0) {
    throw ShapeError("conv2d: c_out " + std::to_string(ws.n) + " not divisible by groups " +
                     std::to_string(p.groups));
  }
  if (in.c != ws.c * p.groups) throw ShapeError(dim_mismatch("conv2d", "c_in", in.c, ws.c * p.groups));
  if (p.has_bias() && static_cast<int>(p.bias.size()) != ws.n) {
    throw ShapeError(dim_mismatch("conv2d", "bias length", static_cast<int>(p.bias.size()), ws.n));
  }
  const int k = ws.h;
  const int stride = p.stride;
  const int pad = p.padding;
  if (in.h + 2 * pad < k) throw ShapeError(dim_mismatch("conv2d", "padded height", in.h + 2 * pad, k));
  if (in.w + 2 * pad < k) throw ShapeError(dim_mismatch("conv2d", "padded width", in.w + 2 * pad, k));
  const int oh = pooled_extent(in.h, k, stride, pad);
  const int ow = pooled_extent(in.w, k, stride, pad);

  const int c_out = ws.n;
  const int cin_g = ws.c;
  const int cout_g = c_out / p.groups;
  const int kk = k * k;

  // Zero-padded copy of the input, wide enough that every column tile can
  // read a full kTileW outputs without bounds checks.
  const int tiles = (ow + kTileW - 1) / kTileW;
  const int hp = in.h + 2 * pad;
  const int wp = std::max(in.w + 2 * pad, (tiles * kTileW - 1) * stride + k);
  std::vector<float> padded(static_cast<std::size_t>(in.n) * in.c * hp * wp, 0.0f);
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < in.c; ++c)
      for (int y = 0; y < in.h; ++y) {
        const float* src = x.plane(n, c) + static_cast<std::size_t>(y) * in.w;
        float* dst = padded.data() + ((static_cast<std::size_t>(n) * in.c + c) * hp + y + pad) * wp + pad;
        std::copy_n(src, in.w, dst);
      }

  // Weights repacked per block of kOcBlock output channels as
  // [ci][ky][kx][lane] doubles; lanes past the group's end are zero.
  const int blocks_per_group = (cout_g + kOcBlock - 1) / kOcBlock;
  const int blocks = blocks_per_group * p.groups;
  const std::size_t block_stride = static_cast<std::size_t>(cin_g) * kk * kOcBlock;
  std::vector<double> packed(static_cast<std::size_t>(blocks) * block_stride, 0.0);
  for (int b = 0; b < blocks; ++b) {
    const int g = b / blocks_per_group;
    const int oc0 = g * cout_g + (b % blocks_per_group) * kOcBlock;
    const int lanes = std::min(kOcBlock, (g + 1) * cout_g - oc0);
    for (int lane = 0; lane < lanes; ++lane) {
      const float* w = p.weight.ptr() + static_cast<std::size_t>(oc0 + lane) * cin_g * kk;
      for (int t = 0; t < cin_g * kk; ++t) packed[b * block_stride + static_cast<std::size_t>(t) * kOcBlock + lane] = w[t];
    }
  }

  Tensor out({in.n, c_out, oh, ow});
#pragma omp parallel for collapse(2) schedule(dynamic)
  for (int n = 0; n < in.n; ++n) {
    for (int b = 0; b < blocks; ++b) {
      const int g = b / blocks_per_group;
      const int oc0 = g * cout_g + (b % blocks_per_group) * kOcBlock;
      const int lanes = std::min(kOcBlock, (g + 1) * cout_g - oc0);
      const double* wb = packed.data() + b * block_stride;
      const float* group_in = padded.data() + (static_cast<std::size_t>(n) * in.c + g * cin_g) * hp * wp;
      for (int oy = 0; oy < oh; ++oy) {
        for (int tile = 0; tile < tiles; ++tile) {
          const int ox0 = tile * kTileW;
          double acc[kOcBlock][kTileW] = {};
          for (int ci = 0; ci < cin_g; ++ci) {
            const float* plane = group_in + static_cast<std::size_t>(ci) * hp * wp;
            for (int ky = 0; ky < k; ++ky) {
              const float* row = plane + static_cast<std::size_t>(oy * stride + ky) * wp + ox0 * stride;
              const double* wk = wb + static_cast<std::size_t>((ci * k + ky) * k) * kOcBlock;
              for (int kx = 0; kx < k; ++kx) {
                double v[kTileW];
                for (int t = 0; t < kTileW; ++t) v[t] = row[t * stride + kx];
                for (int lane = 0; lane < kOcBlock; ++lane) {
                  const double w = wk[kx * kOcBlock + lane];
                  for (int t = 0; t < kTileW; ++t) acc[lane][t] += w * v[t];
                }
              }
            }
          }
          const int width = std::min(kTileW, ow - ox0);
          for (int lane = 0; lane < lanes; ++lane) {
            const double bias = p.has_bias() ? p.bias[oc0 + lane] : 0.0;
            float* dst = out.plane(n, oc0 + lane) + static_cast<std::size_t>(oy) * ow + ox0;
            for (int t = 0; t < width; ++t) dst[t] = static_cast<float>(acc[lane][t] + bias);
          }
        }
      }
    }
  }
  return out;
}

ConvParams fold_batchnorm(const ConvParams& p, const BnParams& bn) {
  const int c_out = p.out_channels();
  const auto len = static_cast<std::size_t>(c_out);
  if (bn.gamma.size() != len || bn.beta.size() != len || bn.mean.size() != len || bn.var.size() != len) {
    throw ShapeError(dim_mismatch("fold_batchnorm", "bn length", bn.channels(), c_out));
  }
  ConvParams folded = p;
  folded.bias.assign(len, 0.0f);
  const std::size_t per_out = p.weight.numel() / std::max<std::size_t>(len, 1);
  float* w = folded.weight.ptr();
  for (int oc = 0; oc < c_out; ++oc) {
    const double scale = static_cast<double>(bn.gamma[oc]) /
                         std::sqrt(static_cast<double>(bn.var[oc]) + static_cast<double>(bn.eps));
    float* wo = w + static_cast<std::size_t>(oc) * per_out;
    for (std::size_t i = 0; i < per_out; ++i) wo[i] = static_cast<float>(wo[i] * scale);
    const double old_bias = p.has_bias() ? p.bias[oc] : 0.0;
    folded.bias[oc] = static_cast<float>(bn.beta[oc] - scale * bn.mean[oc] + scale * old_bias);
  }
  return folded;
}

Tensor batch_norm(const Tensor& x, const BnParams& bn) {
  if (bn.channels() != x.c()) throw ShapeError(dim_mismatch("batch_norm", "c", x.c(), bn.channels()));
  Tensor out(x.shape());
  const std::size_t plane = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const double scale = bn.gamma[c] / std::sqrt(static_cast<double>(bn.var[c]) + bn.eps);
      const double shift = bn.beta[c] - scale * bn.mean[c];
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(scale * src[i] + shift);
    }
  }
  return out;
}

Tensor silu(const Tensor& x) {
  return map_elementwise(x, [](float v) {
    const double d = v;
    return static_cast<float>(d * sigmoid_d(d));
  });
}

Tensor sigmoid(const Tensor& x) {
  return map_elementwise(x, [](float v) { return static_cast<float>(sigmoid_d(v)); });
}

Tensor relu(const Tensor& x) {
  return map_elementwise(x, [](float v) { return v > 0.0f ? v : 0.0f; });
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.h() < 1 || x.w() < 1) throw ShapeError("global_avg_pool: empty spatial extent " + x.shape().str());
  Tensor out({x.n(), x.c(), 1, 1});
  const std::size_t plane = x.shape().plane();
  const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
  for (int pi = 0; pi < planes; ++pi) {
    const float* src = x.ptr() + static_cast<std::size_t>(pi) * plane;
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) sum += src[i];
    out.ptr()[pi] = static_cast<float>(sum / static_cast<double>(plane));
  }
  return out;
}

Tensor maxpool2d(const Tensor& x, int kernel, int stride, int padding) {
  if (kernel < 1 || stride < 1 || padding < 0) throw ShapeError("maxpool2d: invalid window geometry");
  const int oh = pooled_extent(x.h(), kernel, stride, padding);
  const int ow = pooled_extent(x.w(), kernel, stride, padding);
  if (x.h() + 2 * padding < kernel || oh < 1) throw ShapeError(dim_mismatch("maxpool2d", "output height", oh, 1));
  if (x.w() + 2 * padding < kernel || ow < 1) throw ShapeError(dim_mismatch("maxpool2d", "output width", ow, 1));
  Tensor out({x.n(), x.c(), oh, ow});
  const int planes = x.n() * x.c();
  const int h = x.h();
  const int w = x.w();
#pragma omp parallel for schedule(static)
  for (int pi = 0; pi < planes; ++pi) {
    const float* src = x.ptr() + static_cast<std::size_t>(pi) * x.shape().plane();
    float* dst = out.ptr() + static_cast<std::size_t>(pi) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const int y0 = std::max(0, oy * stride - padding);
      const int y1 = std::min(h, oy * stride - padding + kernel);
      for (int ox = 0; ox < ow; ++ox) {
        const int x0 = std::max(0, ox * stride - padding);
        const int x1 = std::min(w, ox * stride - padding + kernel);
        float best = -std::numeric_limits<float>::infinity();
        for (int y = y0; y < y1; ++y) {
          const float* row = src + static_cast<std::size_t>(y) * w;
          for (int xx = x0; xx < x1; ++xx) best = std::max(best, row[xx]);
        }
        dst[oy * ow + ox] = best;
      }
    }
  }
  return out;
}

Tensor upsample_nearest2x(const Tensor& x) {
  const int h = x.h();
  const int w = x.w();
  Tensor out({x.n(), x.c(), 2 * h, 2 * w});
  const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
  for (int pi = 0; pi < planes; ++pi) {
    const float* src = x.ptr() + static_cast<std::size_t>(pi) * h * w;
    float* dst = out.ptr() + static_cast<std::size_t>(pi) * 4 * h * w;
    for (int y = 0; y < 2 * h; ++y) {
      const float* srow = src + static_cast<std::size_t>(y / 2) * w;
      float* drow = dst + static_cast<std::size_t>(y) * 2 * w;
      for (int xx = 0; xx < 2 * w; ++xx) drow[xx] = srow[xx / 2];
    }
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor> xs) {
  if (xs.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape& first = xs.front().shape();
  int channels = 0;
  for (const Tensor& t : xs) {
    const Shape& s = t.shape();
    if (s.n != first.n) throw ShapeError(dim_mismatch("concat_channels", "n", s.n, first.n));
    if (s.h != first.h) throw ShapeError(dim_mismatch("concat_channels", "h", s.h, first.h));
    if (s.w != first.w) throw ShapeError(dim_mismatch("concat_channels", "w", s.w, first.w));
    channels += s.c;
  }
  Tensor out({first.n, channels, first.h, first.w});
  const std::size_t plane = first.plane();
  for (int n = 0; n < first.n; ++n) {
    int c0 = 0;
    for (const Tensor& t : xs) {
      std::copy_n(t.plane(n, 0), plane * t.c(), out.plane(n, c0));
      c0 += t.c();
    }
  }
  return out;
}

Tensor concat_channels(std::initializer_list<Tensor> xs) {
  return concat_channels(std::span<const Tensor>(xs.begin(), xs.size()));
}

Tensor slice_channels(const Tensor& x, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > x.c()) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside " + std::to_string(x.c()) + " channels");
  }
  Tensor out({x.n(), count, x.h(), x.w()});
  const std::size_t plane = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) std::copy_n(x.plane(n, begin), plane * count, out.plane(n, 0));
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("add: shape " + a.shape().str() + " vs " + b.shape().str());
  Tensor out(a.shape());
  const auto count = static_cast<std::ptrdiff_t>(a.numel());
  for (std::ptrdiff_t i = 0; i < count; ++i) out.ptr()[i] = a.ptr()[i] + b.ptr()[i];
  return out;
}

Tensor scale_channels(const Tensor& x, const Tensor& s) {
  const Shape want{x.n(), x.c(), 1, 1};
  if (s.shape() != want) throw ShapeError("scale_channels: scale shape " + s.shape().str() + ", expected " + want.str());
  Tensor out(x.shape());
  const std::size_t plane = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float f = s.at(n, c, 0, 0);
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * f;
    }
  }
  return out;
}

}  // namespace cibse
