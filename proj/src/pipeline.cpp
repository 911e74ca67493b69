// SPDX-License-Identifier: Apache-2.0
#include "cibse/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "cibse/error.hpp"
#include "cibse/model.hpp"

namespace cibse::pipeline {

Tensor resize_bilinear(const Image& img, int out_w, int out_h) {
  if (img.width < 1 || img.height < 1) throw DataError("resize: empty image");
  if (out_w < 1 || out_h < 1) throw ArgumentError("resize: empty output size");
  Tensor out({1, 3, out_h, out_w});
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy_src = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy_src);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = fy_src - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx_src = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx_src);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = fx_src - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
        const double bottom = (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
        out.at(0, c, y, x) = static_cast<float>(((1.0 - fy) * top + fy * bottom) / 255.0);
      }
    }
  }
  return out;
}

LetterboxTransform letterbox_transform(int width, int height, int target) {
  if (width < 1 || height < 1) throw DataError("letterbox: empty image");
  if (target < 1) throw ArgumentError("letterbox: target must be positive");
  LetterboxTransform t;
  t.orig_w = width;
  t.orig_h = height;
  t.target = target;
  t.scale = static_cast<double>(target) / std::max(width, height);
  t.content_w = std::clamp(static_cast<int>(std::lround(width * t.scale)), 1, target);
  t.content_h = std::clamp(static_cast<int>(std::lround(height * t.scale)), 1, target);
  t.pad_left = (target - t.content_w) / 2;
  t.pad_top = (target - t.content_h) / 2;
  return t;
}

int padded_source_index(int rel, int length, int pad_before, int pad_after, PadMode mode) {
  if (rel >= 0 && rel < length) return rel;
  if (rel < 0) {
    const bool mirror = mode == PadMode::Reflect && pad_before <= length - 1;
    return mirror ? -rel : 0;
  }
  const bool mirror = mode == PadMode::Reflect && pad_after <= length - 1;
  return mirror ? 2 * (length - 1) - rel : length - 1;
}

Letterboxed mirror_letterbox(const Image& img, int target, PadMode mode) {
  const LetterboxTransform t = letterbox_transform(img.width, img.height, target);
  const Tensor content = resize_bilinear(img, t.content_w, t.content_h);
  const int pad_right = target - t.content_w - t.pad_left;
  const int pad_bottom = target - t.content_h - t.pad_top;

  std::vector<int> src_x(static_cast<std::size_t>(target));
  std::vector<int> src_y(static_cast<std::size_t>(target));
  for (int i = 0; i < target; ++i) {
    src_x[i] = padded_source_index(i - t.pad_left, t.content_w, t.pad_left, pad_right, mode);
    src_y[i] = padded_source_index(i - t.pad_top, t.content_h, t.pad_top, pad_bottom, mode);
  }
  Tensor out({1, 3, target, target});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < target; ++y) {
      for (int x = 0; x < target; ++x) out.at(0, c, y, x) = content.at(0, c, src_y[y], src_x[x]);
    }
  }
  return {std::move(out), t};
}

Box to_letterbox(const LetterboxTransform& t, const Box& b) {
  auto fx = [&](float v) { return static_cast<float>(v * t.scale + t.pad_left); };
  auto fy = [&](float v) { return static_cast<float>(v * t.scale + t.pad_top); };
  return {fx(b.x1), fy(b.y1), fx(b.x2), fy(b.y2)};
}

namespace {

void check_raw(std::span<const Tensor> raw, std::span<const int> strides, int reg_max, int batch) {
  if (raw.size() != strides.size()) throw ShapeError("decode: one stride per raw map required");
  if (raw.empty()) throw ShapeError("decode: no raw maps");
  const int nc = raw.front().c() - 4 * reg_max;
  if (nc < 1) throw ShapeError("decode: raw map has too few channels for reg_max " + std::to_string(reg_max));
  for (const Tensor& t : raw) {
    if (t.c() != 4 * reg_max + nc) {
      throw ShapeError("decode: raw maps disagree on channel count (" + std::to_string(t.c()) + " vs " +
                       std::to_string(4 * reg_max + nc) + ")");
    }
    if (batch < 0 || batch >= t.n()) throw ShapeError("decode: batch index out of range");
  }
}

}  // namespace

std::vector<Detection> decode_candidates(std::span<const Tensor> raw, std::span<const int> strides, int reg_max,
                                         int batch) {
  check_raw(raw, strides, reg_max, batch);
  const int nc = raw.front().c() - 4 * reg_max;
  std::size_t total = 0;
  for (const Tensor& t : raw) total += t.shape().plane();
  std::vector<Detection> out;
  out.reserve(total);
  std::vector<double> weights(static_cast<std::size_t>(reg_max));

  for (std::size_t si = 0; si < raw.size(); ++si) {
    const Tensor& t = raw[si];
    const double s = strides[si];
    for (int y = 0; y < t.h(); ++y) {
      for (int x = 0; x < t.w(); ++x) {
        std::array<double, 4> dist{};
        for (int side = 0; side < 4; ++side) {
          double peak = -INFINITY;
          for (int k = 0; k < reg_max; ++k) peak = std::max<double>(peak, t.at(batch, side * reg_max + k, y, x));
          double norm = 0.0;
          double expect = 0.0;
          for (int k = 0; k < reg_max; ++k) {
            const double e = std::exp(t.at(batch, side * reg_max + k, y, x) - peak);
            norm += e;
            expect += k * e;
          }
          dist[side] = s * expect / norm;
        }
        int best = 0;
        for (int c = 1; c < nc; ++c) {
          if (t.at(batch, 4 * reg_max + c, y, x) > t.at(batch, 4 * reg_max + best, y, x)) best = c;
        }
        const double logit = t.at(batch, 4 * reg_max + best, y, x);
        const double cx = (x + 0.5) * s;
        const double cy = (y + 0.5) * s;
        Detection d;
        d.class_id = best;
        d.score = static_cast<float>(1.0 / (1.0 + std::exp(-logit)));
        d.box = {static_cast<float>(cx - dist[0]), static_cast<float>(cy - dist[1]), static_cast<float>(cx + dist[2]),
                 static_cast<float>(cy + dist[3])};
        out.push_back(d);
      }
    }
  }
  return out;
}

std::vector<Detection> decode_predictions(std::span<const Tensor> raw, std::span<const int> strides, int reg_max,
                                          float conf_thr, int batch) {
  std::vector<Detection> all = decode_candidates(raw, strides, reg_max, batch);
  std::erase_if(all, [&](const Detection& d) { return d.score < conf_thr; });
  return all;
}

std::vector<Detection> nms(std::span<const Detection> dets, float iou_thr, int max_det) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].class_id < dets[b].class_id;
  });
  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    if (static_cast<int>(kept.size()) >= max_det) break;
    const Detection& d = dets[idx];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == d.class_id && iou(k.box, d.box) > iou_thr;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> unletterbox(const LetterboxTransform& t, std::span<const Detection> dets) {
  std::vector<Detection> out(dets.begin(), dets.end());
  const auto w = static_cast<double>(t.orig_w);
  const auto h = static_cast<double>(t.orig_h);
  for (Detection& d : out) {
    auto map = [&](float v, int pad, double limit) {
      return static_cast<float>(std::clamp((v - pad) / t.scale, 0.0, limit));
    };
    d.box = {map(d.box.x1, t.pad_left, w), map(d.box.y1, t.pad_top, h), map(d.box.x2, t.pad_left, w),
             map(d.box.y2, t.pad_top, h)};
  }
  return out;
}

std::vector<Detection> detect(const model::Model& model, const Image& img, const DetectOptions& opts) {
  const Letterboxed lb = mirror_letterbox(img, opts.imgsz, opts.pad_mode);
  const std::vector<Tensor> raw = model.forward(lb.tensor);
  const auto& strides = model.graph().strides;
  const std::vector<Detection> cands = decode_predictions(raw, strides, model.graph().reg_max, opts.conf);
  const std::vector<Detection> kept = nms(cands, opts.iou, opts.max_det);
  return unletterbox(lb.transform, kept);
}

}  // namespace cibse::pipeline
