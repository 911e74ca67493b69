// SPDX-License-Identifier: Apache-2.0
#include "cibse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "cibse/error.hpp"

namespace cibse::eval {
namespace {

std::vector<std::size_t> by_descending_score(std::span<const Detection> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  return order;
}

// Precision envelope and recall at every rank.
struct Curve {
  std::vector<double> recall;
  std::vector<double> envelope;
};

Curve build_curve(std::span<const ScoredFlag> ranked, long n_truth) {
  Curve c;
  c.recall.resize(ranked.size());
  c.envelope.resize(ranked.size());
  long tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].tp) ++tp;
    c.recall[i] = static_cast<double>(tp) / static_cast<double>(n_truth);
    c.envelope[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = ranked.size(); i-- > 1;) c.envelope[i - 1] = std::max(c.envelope[i - 1], c.envelope[i]);
  return c;
}

// Envelope precision at recall level r: the envelope at the first rank whose
// recall reaches r, or 0 when no rank does.
double envelope_at(const Curve& c, double r) {
  const auto it = std::lower_bound(c.recall.begin(), c.recall.end(), r);
  if (it == c.recall.end()) return 0.0;
  return c.envelope[static_cast<std::size_t>(it - c.recall.begin())];
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

struct Counts {
  long tp = 0;
  long fp = 0;
};

Counts counts_at(std::span<const ScoredFlag> ranked, double threshold) {
  Counts c;
  for (const ScoredFlag& f : ranked) {
    if (f.score < threshold) break;
    (f.tp ? c.tp : c.fp) += 1;
  }
  return c;
}

}  // namespace

MatchResult match_detections(std::span<const Detection> preds, std::span<const Box> truths, double iou_thr) {
  MatchResult r;
  r.true_positive.assign(preds.size(), false);
  std::vector<bool> claimed(truths.size(), false);
  for (std::size_t idx : by_descending_score(preds)) {
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t j = 0; j < truths.size(); ++j) {
      if (claimed[j]) continue;
      const double v = iou(preds[idx].box, truths[j]);
      if (v >= iou_thr && (best < 0 || v > best_iou)) {
        best = static_cast<int>(j);
        best_iou = v;
      }
    }
    if (best >= 0) {
      claimed[static_cast<std::size_t>(best)] = true;
      r.true_positive[idx] = true;
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = static_cast<int>(truths.size()) - r.tp;
  return r;
}

PrecisionRecall precision_recall(long tp, long fp, long fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw ArgumentError("precision_recall: negative count");
  PrecisionRecall pr;
  if (tp + fp > 0) pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return pr;
}

double average_precision(std::span<const ScoredFlag> ranked, long n_truth, ApMethod method) {
  if (n_truth <= 0 || ranked.empty()) return 0.0;
  const Curve c = build_curve(ranked, n_truth);
  switch (method) {
    case ApMethod::Exact: {
      double area = 0.0;
      double prev_recall = 0.0;
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        area += (c.recall[i] - prev_recall) * c.envelope[i];
        prev_recall = c.recall[i];
      }
      return area;
    }
    case ApMethod::Interp101: {
      double sum = 0.0;
      for (int k = 0; k <= 100; ++k) sum += envelope_at(c, k / 100.0);
      return sum / 101.0;
    }
  }
  throw ArgumentError("average_precision: unknown method");
}

std::vector<PrPoint> envelope_curve(std::span<const ScoredFlag> ranked, long n_truth) {
  if (ranked.empty() || n_truth <= 0) return {};
  const Curve c = build_curve(ranked, n_truth);
  std::vector<PrPoint> raw{{0.0, c.envelope.front()}};
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].tp) raw.push_back({c.recall[i], c.envelope[i]});
  }
  std::vector<PrPoint> pts;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const bool interior = i > 0 && i + 1 < raw.size() && raw[i - 1].precision == raw[i].precision &&
                          raw[i + 1].precision == raw[i].precision;
    if (!interior) pts.push_back(raw[i]);
  }
  return pts;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

EvalReport evaluate(std::span<const ImageEval> images, const EvalOptions& opts) {
  if (opts.num_classes < 1) throw ArgumentError("evaluate: num_classes must be positive");
  if (opts.iou_thresholds.empty() || std::abs(opts.iou_thresholds.front() - 0.5) > 1e-12) {
    throw ArgumentError("evaluate: IoU thresholds must start at 0.5");
  }
  for (const ImageEval& im : images) {
    for (const Detection& d : im.predictions) {
      if (d.class_id < 0 || d.class_id >= opts.num_classes) {
        throw ArgumentError("evaluate: prediction class " + std::to_string(d.class_id) + " outside schema in image " +
                            im.image_id);
      }
    }
    for (const GroundTruth& g : im.truths) {
      if (g.class_id < 0 || g.class_id >= opts.num_classes) {
        throw ArgumentError("evaluate: truth class " + std::to_string(g.class_id) + " outside schema in image " +
                            im.image_id);
      }
    }
  }

  EvalReport report;
  report.iou_thresholds = opts.iou_thresholds;
  for (int cls = 0; cls < opts.num_classes; ++cls) {
    ClassReport cr;
    cr.class_id = cls;
    // per-image slices of this class
    std::vector<std::vector<Detection>> preds(images.size());
    std::vector<std::vector<Box>> truths(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
      for (const Detection& d : images[i].predictions) {
        if (d.class_id == cls) preds[i].push_back(d);
      }
      for (const GroundTruth& g : images[i].truths) {
        if (g.class_id == cls) truths[i].push_back(g.box);
      }
      cr.n_truth += static_cast<long>(truths[i].size());
    }
    for (const double thr : opts.iou_thresholds) {
      std::vector<ScoredFlag> pooled;
      for (std::size_t i = 0; i < images.size(); ++i) {
        const MatchResult m = match_detections(preds[i], truths[i], thr);
        for (std::size_t k = 0; k < preds[i].size(); ++k) pooled.push_back({preds[i][k].score, m.true_positive[k]});
      }
      std::stable_sort(pooled.begin(), pooled.end(),
                       [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });
      cr.ap_per_iou.push_back(average_precision(pooled, cr.n_truth, opts.method));
      if (cr.ranked50.empty() && cr.ap_per_iou.size() == 1) cr.ranked50 = std::move(pooled);
    }
    cr.ap50 = cr.ap_per_iou.front();
    cr.ap50_95 = mean(cr.ap_per_iou);
    report.classes.push_back(std::move(cr));
  }

  std::vector<const ClassReport*> active;
  for (const ClassReport& cr : report.classes) {
    if (cr.n_truth > 0) active.push_back(&cr);
  }
  if (active.empty()) return report;

  std::vector<double> ap50;
  std::vector<double> ap50_95;
  for (const ClassReport* cr : active) {
    ap50.push_back(cr->ap50);
    ap50_95.push_back(cr->ap50_95);
  }
  report.map50 = mean(ap50);
  report.map50_95 = mean(ap50_95);

  // precision / recall operating point
  auto class_pr = [&](const ClassReport& cr, double thr) {
    const Counts c = counts_at(cr.ranked50, thr);
    return precision_recall(c.tp, c.fp, cr.n_truth - c.tp);
  };
  double chosen = 0.0;
  bool have_threshold = false;
  if (opts.conf_eval) {
    chosen = *opts.conf_eval;
    have_threshold = true;
  } else {
    std::vector<double> candidates;
    for (const ClassReport* cr : active) {
      for (const ScoredFlag& f : cr->ranked50) candidates.push_back(f.score);
    }
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    double best_f1 = -1.0;
    for (const double thr : candidates) {
      double f1_sum = 0.0;
      for (const ClassReport* cr : active) {
        const PrecisionRecall pr = class_pr(*cr, thr);
        f1_sum += f1(pr.precision, pr.recall);
      }
      const double f1_mean = f1_sum / static_cast<double>(active.size());
      if (f1_mean > best_f1) {
        best_f1 = f1_mean;
        chosen = thr;
        have_threshold = true;
      }
    }
  }

  double p_sum = 0.0;
  double r_sum = 0.0;
  for (ClassReport& cr : report.classes) {
    if (cr.n_truth == 0) continue;
    const Counts c = have_threshold ? counts_at(cr.ranked50, chosen) : Counts{};
    const PrecisionRecall pr = precision_recall(c.tp, c.fp, cr.n_truth - c.tp);
    cr.precision = pr.precision;
    cr.recall = pr.recall;
    p_sum += pr.precision;
    r_sum += pr.recall;
    report.tp += c.tp;
    report.fp += c.fp;
    report.fn += cr.n_truth - c.tp;
  }
  report.precision = p_sum / static_cast<double>(active.size());
  report.recall = r_sum / static_cast<double>(active.size());
  report.conf_threshold = chosen;
  return report;
}

std::vector<PrCurve> export_pr_curve(const EvalReport& report) {
  std::vector<PrCurve> curves;
  std::vector<Curve> active;
  for (const ClassReport& cr : report.classes) {
    curves.push_back({std::to_string(cr.class_id), envelope_curve(cr.ranked50, cr.n_truth)});
    if (cr.n_truth > 0) active.push_back(build_curve(cr.ranked50, cr.n_truth));
  }
  PrCurve all{"all", {}};
  if (!active.empty()) {
    for (int k = 0; k <= 100; ++k) {
      const double r = k / 100.0;
      double sum = 0.0;
      for (const Curve& c : active) sum += envelope_at(c, r);
      all.points.push_back({r, sum / static_cast<double>(active.size())});
    }
  }
  curves.push_back(std::move(all));
  return curves;
}

void write_pr_csv(std::ostream& os, std::span<const PrCurve> curves) {
  os << "class,recall,precision\n";
  char buf[96];
  for (const PrCurve& c : curves) {
    for (const PrPoint& p : c.points) {
      std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f\n", c.label.c_str(), p.recall, p.precision);
      os << buf;
    }
  }
}

void write_report_table(std::ostream& os, std::string_view model_name, const EvalReport& report) {
  char buf[256];
  os << "Model | Precision | Recall | mAP50 | mAP50-95\n";
  std::snprintf(buf, sizeof buf, "%.*s | %.6f | %.6f | %.6f | %.6f\n", static_cast<int>(model_name.size()),
                model_name.data(), report.precision, report.recall, report.map50, report.map50_95);
  os << buf;
}

EarlyStop early_stop(std::span<const double> history, int patience) {
  if (history.empty()) throw ArgumentError("early_stop: empty history");
  if (patience < 1) throw ArgumentError("early_stop: patience must be at least 1");
  EarlyStop r{1, 1};
  double best = history[0];
  for (std::size_t i = 1; i < history.size(); ++i) {
    const int epoch = static_cast<int>(i) + 1;
    if (history[i] > best) {
      best = history[i];
      r.best_epoch = epoch;
    } else if (epoch - r.best_epoch >= patience) {
      r.stop_epoch = epoch;
      return r;
    }
  }
  r.stop_epoch = static_cast<int>(history.size());
  return r;
}

}  // namespace cibse::eval
