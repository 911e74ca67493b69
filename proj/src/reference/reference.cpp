// SPDX-License-Identifier: Apache-2.0
#include "cibse/reference.hpp"

#include <cmath>
#include <limits>

#include "cibse/error.hpp"

namespace cibse::reference {

Tensor conv2d(const Tensor& x, const ConvParams& p) {
  const int c_out = p.weight.n();
  const int cin_g = p.weight.c();
  const int k = p.weight.h();
  const int groups = p.groups;
  if (x.c() != cin_g * groups) throw ShapeError("reference::conv2d: c_in mismatch");
  const int oh = (x.h() + 2 * p.padding - k) / p.stride + 1;
  const int ow = (x.w() + 2 * p.padding - k) / p.stride + 1;
  const int cout_g = c_out / groups;
  Tensor out({x.n(), c_out, oh, ow});
  for (int n = 0; n < x.n(); ++n)
    for (int oc = 0; oc < c_out; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double sum = 0.0;
          const int g = oc / cout_g;
          for (int ic = 0; ic < cin_g; ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * p.stride + ky - p.padding;
                const int ix = ox * p.stride + kx - p.padding;
                if (iy < 0 || ix < 0 || iy >= x.h() || ix >= x.w()) continue;
                sum += static_cast<double>(p.weight.at(oc, ic, ky, kx)) * x.at(n, g * cin_g + ic, iy, ix);
              }
          if (p.has_bias()) sum += p.bias[oc];
          out.at(n, oc, oy, ox) = static_cast<float>(sum);
        }
  return out;
}

Tensor batch_norm(const Tensor& x, const BnParams& bn) {
  Tensor out(x.shape());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < x.h(); ++y)
        for (int i = 0; i < x.w(); ++i) {
          const double norm = (x.at(n, c, y, i) - static_cast<double>(bn.mean[c])) /
                              std::sqrt(static_cast<double>(bn.var[c]) + bn.eps);
          out.at(n, c, y, i) = static_cast<float>(bn.gamma[c] * norm + bn.beta[c]);
        }
  return out;
}

Tensor silu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = x.data()[i];
    out.data()[i] = static_cast<float>(v / (1.0 + std::exp(-v)));
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    out.data()[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x.data()[i]))));
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = x.data()[i] < 0.0f ? 0.0f : x.data()[i];
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  Tensor out({x.n(), x.c(), 1, 1});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c) {
      double sum = 0.0;
      for (int y = 0; y < x.h(); ++y)
        for (int i = 0; i < x.w(); ++i) sum += x.at(n, c, y, i);
      out.at(n, c, 0, 0) = static_cast<float>(sum / (static_cast<double>(x.h()) * x.w()));
    }
  return out;
}

Tensor maxpool2d(const Tensor& x, int kernel, int stride, int padding) {
  const int oh = (x.h() + 2 * padding - kernel) / stride + 1;
  const int ow = (x.w() + 2 * padding - kernel) / stride + 1;
  Tensor out({x.n(), x.c(), oh, ow});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) {
              const int iy = oy * stride + ky - padding;
              const int ix = ox * stride + kx - padding;
              if (iy < 0 || ix < 0 || iy >= x.h() || ix >= x.w()) continue;
              if (x.at(n, c, iy, ix) > best) best = x.at(n, c, iy, ix);
            }
          out.at(n, c, oy, ox) = best;
        }
  return out;
}

Tensor upsample_nearest2x(const Tensor& x) {
  Tensor out({x.n(), x.c(), 2 * x.h(), 2 * x.w()});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < x.h(); ++y)
        for (int i = 0; i < x.w(); ++i)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) out.at(n, c, 2 * y + dy, 2 * i + dx) = x.at(n, c, y, i);
  return out;
}

Tensor concat_channels(std::span<const Tensor> xs) {
  int channels = 0;
  for (const Tensor& t : xs) channels += t.c();
  const Shape& s0 = xs.front().shape();
  Tensor out({s0.n, channels, s0.h, s0.w});
  for (int n = 0; n < s0.n; ++n) {
    int base = 0;
    for (const Tensor& t : xs) {
      for (int c = 0; c < t.c(); ++c)
        for (int y = 0; y < s0.h; ++y)
          for (int i = 0; i < s0.w; ++i) out.at(n, base + c, y, i) = t.at(n, c, y, i);
      base += t.c();
    }
  }
  return out;
}

Tensor slice_channels(const Tensor& x, int begin, int count) {
  Tensor out({x.n(), count, x.h(), x.w()});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < count; ++c)
      for (int y = 0; y < x.h(); ++y)
        for (int i = 0; i < x.w(); ++i) out.at(n, c, y, i) = x.at(n, begin + c, y, i);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

Tensor scale_channels(const Tensor& x, const Tensor& s) {
  Tensor out(x.shape());
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < x.h(); ++y)
        for (int i = 0; i < x.w(); ++i) out.at(n, c, y, i) = x.at(n, c, y, i) * s.at(n, c, 0, 0);
  return out;
}

}  // namespace cibse::reference
