// SPDX-License-Identifier: Apache-2.0
// Independent oracles shared by the unit tests and the acceptance runner:
// direct-loop kernels, block compositions over the serial primitives with
// unfused batch norm, and brute-force letterbox / NMS rules.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "cibse/blocks.hpp"
#include "cibse/detection.hpp"
#include "cibse/image.hpp"
#include "cibse/reference.hpp"
#include "metrics_oracle.hpp"
#include "support.hpp"

namespace cibse::testing {

inline Tensor naive_conv(const Tensor& x, const ConvParams& p) {
  const int k = p.weight.h();
  const int cout = p.weight.n();
  const int cin_g = p.weight.c();
  const int cout_g = cout / p.groups;
  const int oh = (x.h() + 2 * p.padding - k) / p.stride + 1;
  const int ow = (x.w() + 2 * p.padding - k) / p.stride + 1;
  Tensor out({x.n(), cout, oh, ow});
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < cout; ++o)
      for (int y = 0; y < oh; ++y)
        for (int xo = 0; xo < ow; ++xo) {
          double acc = p.bias.empty() ? 0.0 : p.bias[o];
          for (int ci = 0; ci < cin_g; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = y * p.stride - p.padding + ky;
                const int ix = xo * p.stride - p.padding + kx;
                if (iy < 0 || ix < 0 || iy >= x.h() || ix >= x.w()) continue;
                acc += static_cast<double>(p.weight.at(o, ci, ky, kx)) * x.at(n, (o / cout_g) * cin_g + ci, iy, ix);
              }
          out.at(n, o, y, xo) = static_cast<float>(acc);
        }
  return out;
}

inline ConvParams random_conv(int cin, int cout, int k, int stride, int pad, int groups, bool bias,
                              std::mt19937_64& rng) {
  ConvParams p;
  p.weight = random_tensor({cout, cin / groups, k, k}, rng);
  if (bias) p.bias = random_vector(cout, rng, -1.0f, 1.0f);
  p.stride = stride;
  p.padding = pad;
  p.groups = groups;
  return p;
}

inline Tensor naive_maxpool(const Tensor& x, int k, int s, int pad) {
  const int oh = (x.h() + 2 * pad - k) / s + 1;
  const int ow = (x.w() + 2 * pad - k) / s + 1;
  Tensor out({x.n(), x.c(), oh, ow});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          float m = -std::numeric_limits<float>::infinity();
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int iy = y * s - pad + dy;
              const int ix = xx * s - pad + dx;
              if (iy >= 0 && ix >= 0 && iy < x.h() && ix < x.w()) m = std::max(m, x.at(n, c, iy, ix));
            }
          out.at(n, c, y, xx) = m;
        }
  return out;
}

inline Tensor naive_gap(const Tensor& x) {
  Tensor out({x.n(), x.c(), 1, 1});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c) {
      double s = 0.0;
      for (int y = 0; y < x.h(); ++y)
        for (int xx = 0; xx < x.w(); ++xx) s += x.at(n, c, y, xx);
      out.at(n, c, 0, 0) = static_cast<float>(s / (static_cast<double>(x.h()) * x.w()));
    }
  return out;
}

// Block compositions in the documented order.
namespace oracle {

namespace ref = cibse::reference;

inline Tensor conv_block(const Tensor& x, const nn::ConvBlock& b) {
  const Tensor y = ref::batch_norm(ref::conv2d(x, b.conv), b.bn);
  return b.activate ? ref::silu(y) : y;
}

inline Tensor bottleneck(const Tensor& x, const nn::Bottleneck& b) {
  const Tensor y = conv_block(conv_block(x, b.cv1), b.cv2);
  return b.shortcut ? ref::add(x, y) : y;
}

inline Tensor cib(const Tensor& x, const nn::CIBBlock& b) {
  Tensor y = x;
  for (const nn::ConvBlock& s : b.stages) y = conv_block(y, s);
  return b.residual ? ref::add(x, y) : y;
}

template <class Inner, class F>
Tensor csp(const Tensor& x, const nn::CspBlock<Inner>& b, F inner) {
  const Tensor y = conv_block(x, b.cv1);
  const int h = y.c() / 2;
  std::vector<Tensor> parts{ref::slice_channels(y, 0, h), ref::slice_channels(y, h, h)};
  for (const Inner& m : b.inner) parts.push_back(inner(parts.back(), m));
  return conv_block(ref::concat_channels(parts), b.cv2);
}

inline Tensor se(const Tensor& x, const nn::SEBlock& s) {
  const Tensor z = ref::global_avg_pool(x);
  const Tensor e = ref::sigmoid(ref::conv2d(ref::relu(ref::conv2d(z, s.fc1)), s.fc2));
  return ref::scale_channels(x, e);
}

inline Tensor sppf(const Tensor& x, const nn::SPPFBlock& b) {
  const Tensor y = conv_block(x, b.cv1);
  const Tensor p1 = ref::maxpool2d(y, 5, 1, 2);
  const Tensor p2 = ref::maxpool2d(p1, 5, 1, 2);
  const Tensor p3 = ref::maxpool2d(p2, 5, 1, 2);
  const Tensor all[] = {y, p1, p2, p3};
  return conv_block(ref::concat_channels(all), b.cv2);
}

inline Tensor head_scale(const Tensor& f, const nn::HeadScale& s) {
  const Tensor box = ref::conv2d(conv_block(conv_block(f, s.box.first), s.box.second), s.box.out);
  const Tensor cls = ref::conv2d(conv_block(conv_block(f, s.cls.first), s.cls.second), s.cls.out);
  const Tensor both[] = {box, cls};
  return ref::concat_channels(both);
}

}  // namespace oracle

inline Image random_image(int w, int h, std::mt19937_64& rng) {
  Image img(w, h);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(byte(rng));
  return img;
}

// Reflect about the edge pixel, per side; a side too wide to mirror
// repeats the edge instead.
inline int reflect_oracle(int rel, int len, int before, int after) {
  if (rel < 0) return before > len - 1 ? 0 : -rel;
  if (rel >= len) return after > len - 1 ? len - 1 : (len - 1) - (rel - (len - 1));
  return rel;
}

inline Box random_box(std::mt19937_64& rng, float extent) {
  std::uniform_real_distribution<float> pos(0.0f, extent);
  std::uniform_real_distribution<float> size(2.0f, extent / 3.0f);
  const float x = pos(rng);
  const float y = pos(rng);
  return {x, y, x + size(rng), y + size(rng)};
}

inline std::vector<Detection> random_dets(std::mt19937_64& rng, int n, int classes) {
  std::uniform_int_distribution<int> cls(0, classes - 1);
  std::uniform_int_distribution<int> score(1, 20);  // coarse, so ties happen
  std::vector<Detection> d(static_cast<std::size_t>(n));
  for (auto& x : d) x = {cls(rng), static_cast<float>(score(rng)) / 20.0f, random_box(rng, 60.0f)};
  return d;
}

inline std::vector<Detection> quadratic_nms(const std::vector<Detection>& d, float thr, int max_det) {
  const std::size_t n = d.size();
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  auto before = [&](std::size_t a, std::size_t b) {
    if (d[a].score != d[b].score) return d[a].score > d[b].score;
    if (d[a].class_id != d[b].class_id) return d[a].class_id < d[b].class_id;
    return a < b;
  };
  // Selection sort: fine at these sizes and obviously correct.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (before(rank[j], rank[i])) std::swap(rank[i], rank[j]);
  std::vector<bool> dead(n, false);
  std::vector<Detection> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (dead[i]) continue;
    out.push_back(d[rank[i]]);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[rank[j]].class_id == d[rank[i]].class_id &&
          metrics_oracle::box_iou(d[rank[i]].box, d[rank[j]].box) > thr)
        dead[j] = true;
    }
  }
  if (static_cast<int>(out.size()) > max_det) out.resize(static_cast<std::size_t>(max_det));
  return out;
}

}  // namespace cibse::testing
