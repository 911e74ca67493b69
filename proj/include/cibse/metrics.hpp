// SPDX-License-Identifier: Apache-2.0
//
// Detection evaluation: matching, precision / recall, average precision,
// mAP over IoU thresholds, precision-recall curves, and patience-based early
// stopping.
//
// Matching is per image and per class: predictions are visited by
// descending score (input order breaks ties) and each claims the unmatched
// ground truth with the highest IoU, provided that IoU reaches the
// threshold. Pooled rankings across images sort by score, breaking ties by
// image order and then prediction order.
//
// mAP averages over classes that have at least one ground truth.
#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cibse/detection.hpp"

namespace cibse::eval {

struct GroundTruth {
  int class_id = 0;  // 0 = helmet, 1 = head
  Box box;
};

struct ImageEval {
  std::string image_id;
  std::vector<Detection> predictions;
  std::vector<GroundTruth> truths;
};

struct MatchResult {
  std::vector<bool> true_positive;  // aligned with the input predictions
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

/// Single image, single class.
MatchResult match_detections(std::span<const Detection> preds, std::span<const Box> truths, double iou_thr);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// TP / (TP + FP) and TP / (TP + FN), each 0 when its denominator is 0.
PrecisionRecall precision_recall(long tp, long fp, long fn);

struct ScoredFlag {
  double score = 0.0;
  bool tp = false;
};

enum class ApMethod { Exact, Interp101 };

/// `ranked` must be sorted by descending confidence. Exact integrates the
/// monotone precision envelope over recall; Interp101 averages the envelope
/// sampled at recall 0.00, 0.01, ..., 1.00. Returns 0 when n_truth is 0.
double average_precision(std::span<const ScoredFlag> ranked, long n_truth, ApMethod method = ApMethod::Interp101);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Vertices of the monotone precision envelope, starting at recall 0.
/// Interior points of constant-precision runs are dropped. Empty when
/// `ranked` is empty.
std::vector<PrPoint> envelope_curve(std::span<const ScoredFlag> ranked, long n_truth);

struct ClassReport {
  int class_id = 0;
  long n_truth = 0;
  double ap50 = 0.0;
  double ap50_95 = 0.0;
  std::vector<double> ap_per_iou;
  double precision = 0.0;
  double recall = 0.0;
  std::vector<ScoredFlag> ranked50;  // pooled ranking at IoU 0.5
};

struct EvalReport {
  std::vector<ClassReport> classes;
  std::vector<double> iou_thresholds;
  double precision = 0.0;
  double recall = 0.0;
  double map50 = 0.0;
  double map50_95 = 0.0;
  double conf_threshold = 0.0;  // operating point of precision / recall
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

/// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

struct EvalOptions {
  int num_classes = 2;
  std::vector<double> iou_thresholds = coco_iou_thresholds();
  ApMethod method = ApMethod::Interp101;
  /// Fixed confidence for the precision / recall operating point; when unset
  /// the confidence maximizing the class-averaged F1 is used.
  std::optional<double> conf_eval;
};

/// Throws ArgumentError when a class id is outside [0, num_classes) or the
/// IoU set does not start at 0.5.
EvalReport evaluate(std::span<const ImageEval> images, const EvalOptions& opts = {});

struct PrCurve {
  std::string label;  // class id, or "all" for the class-mean curve
  std::vector<PrPoint> points;
};

/// Per-class envelope curves at IoU 0.5 plus a class-mean curve sampled at
/// recall 0.00 .. 1.00.
std::vector<PrCurve> export_pr_curve(const EvalReport& report);

/// `class,recall,precision` rows, six decimals, LF endings.
void write_pr_csv(std::ostream& os, std::span<const PrCurve> curves);

/// `Model | Precision | Recall | mAP50 | mAP50-95` header and one row.
void write_report_table(std::ostream& os, std::string_view model_name, const EvalReport& report);

struct EarlyStop {
  int stop_epoch = 0;  // 1-based
  int best_epoch = 0;  // 1-based
};

/// Stops at the first epoch that is `patience` epochs past the best so far,
/// where improving means strictly greater. Throws ArgumentError for an empty
/// history or patience < 1.
EarlyStop early_stop(std::span<const double> history, int patience = 10);

}  // namespace cibse::eval
