// SPDX-License-Identifier: Apache-2.0
//
// Image-to-detections path.
//
// Preprocessing resizes the image with bilinear interpolation so its longer
// side equals the target, then fills the remaining border of the square
// canvas by mirroring the content about its edge (the edge pixel itself is
// not repeated). A side whose padding is wider than the content can mirror
// falls back to repeating the edge pixel. Padding is split evenly with the
// odd pixel going right / bottom.
//
// Bilinear resize uses half-pixel centres: output pixel x samples source
// coordinate (x + 0.5) * in_w / out_w - 0.5, clamped to [0, in_w - 1]; the
// result is divided by 255 and stored as float.
#pragma once

#include <span>
#include <vector>

#include "cibse/detection.hpp"
#include "cibse/image.hpp"
#include "cibse/tensor.hpp"

namespace cibse::model {
class Model;
}

namespace cibse::pipeline {

enum class PadMode { Reflect, Replicate };

struct LetterboxTransform {
  double scale = 1.0;
  int pad_left = 0;
  int pad_top = 0;
  int content_w = 0;
  int content_h = 0;
  int orig_w = 0;
  int orig_h = 0;
  int target = 416;
};

struct Letterboxed {
  Tensor tensor;  // (1, 3, target, target), RGB in [0, 1]
  LetterboxTransform transform;
};

/// (1, 3, out_h, out_w) float image in [0, 1].
Tensor resize_bilinear(const Image& img, int out_w, int out_h);

LetterboxTransform letterbox_transform(int width, int height, int target);

/// Content index that fills position `rel` of an axis whose content spans
/// [0, length) and is padded by pad_before / pad_after pixels.
int padded_source_index(int rel, int length, int pad_before, int pad_after, PadMode mode);

/// Throws DataError for an empty image.
Letterboxed mirror_letterbox(const Image& img, int target = 416, PadMode mode = PadMode::Reflect);

/// Original-image box to letterbox coordinates.
Box to_letterbox(const LetterboxTransform& t, const Box& b);

/// Every cell of every scale, in scale then row-major order, before any
/// confidence filtering. raw[i] is (n, 4*reg_max + nc, h, w).
std::vector<Detection> decode_candidates(std::span<const Tensor> raw, std::span<const int> strides, int reg_max,
                                         int batch = 0);

std::vector<Detection> decode_predictions(std::span<const Tensor> raw, std::span<const int> strides, int reg_max,
                                          float conf_thr, int batch = 0);

/// Class-aware greedy suppression: a box is dropped when its IoU with an
/// already kept box of the same class exceeds iou_thr. Candidates are
/// visited by descending score, then lower class id, then input order.
std::vector<Detection> nms(std::span<const Detection> dets, float iou_thr, int max_det = 300);

std::vector<Detection> unletterbox(const LetterboxTransform& t, std::span<const Detection> dets);

struct DetectOptions {
  int imgsz = 416;
  float conf = 0.25f;
  float iou = 0.45f;
  int max_det = 300;
  PadMode pad_mode = PadMode::Reflect;
};

/// Full pipeline: letterbox, forward, decode, NMS, map back to the image.
std::vector<Detection> detect(const model::Model& model, const Image& img, const DetectOptions& opts = {});

}  // namespace cibse::pipeline
