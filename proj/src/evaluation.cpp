/* Copyright 2026 The AdaHead Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "adahead/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace adahead {

MatchResult match_detections(const std::vector<Detection>& preds, const std::vector<GroundTruth>& gts,
                             double iou_threshold) {
  MatchResult r;
  r.true_positive.assign(preds.size(), false);
  r.matched_gt.assign(preds.size(), -1);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    double best = -1.0;
    int best_gt = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].category != preds[p].category) continue;
      const double v = iou(preds[p].box, gts[g].box);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      taken[static_cast<std::size_t>(best_gt)] = true;
      r.true_positive[p] = true;
      r.matched_gt[p] = best_gt;
    }
  }
  r.unmatched_gts = static_cast<Index>(std::count(taken.begin(), taken.end(), false));
  return r;
}

PrSeries precision_recall(const std::vector<bool>& flags, Index n_pos) {
  PrSeries s;
  s.recall_undefined = n_pos <= 0;
  Index tp = 0;
  for (std::size_t r = 0; r < flags.size(); ++r) {
    tp += flags[r] ? 1 : 0;
    s.precision.push_back(static_cast<double>(tp) / static_cast<double>(r + 1));
    s.recall.push_back(n_pos > 0 ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0);
  }
  return s;
}

ApResult ap_paper(const std::vector<bool>& flags, Index n_pos) {
  if (n_pos <= 0) return {0.0, true};
  const PrSeries s = precision_recall(flags, n_pos);
  const std::size_t last = std::min(static_cast<std::size_t>(n_pos), flags.size());
  double sum = 0;
  for (std::size_t r = 0; r < last; ++r) sum += s.precision[r] * s.recall[r];
  return {sum / static_cast<double>(n_pos), false};
}

double ap_interp(const PrSeries& series) {
  const std::size_t n = series.recall.size();
  if (n == 0 || series.recall_undefined) return 0.0;
  // Suffix maximum of precision; recall is nondecreasing along the ranking.
  std::vector<double> envelope(series.precision);
  for (std::size_t i = n - 1; i-- > 0;) envelope[i] = std::max(envelope[i], envelope[i + 1]);
  double sum = 0;
  std::size_t cursor = 0;
  for (int g = 0; g <= 100; ++g) {
    const double t = static_cast<double>(g) / 100.0;
    while (cursor < n && series.recall[cursor] < t) ++cursor;
    if (cursor < n) sum += envelope[cursor];
  }
  return sum / 101.0;
}

double mean_ap(const std::vector<double>& aps) {
  if (aps.empty()) return 0.0;
  return std::accumulate(aps.begin(), aps.end(), 0.0) / static_cast<double>(aps.size());
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(static_cast<double>(50 + 5 * i) / 100.0);
  return t;
}

namespace {

struct RankedFlag {
  Detection det;
  std::size_t image;
  bool tp;
};

std::vector<Detection> ranked_of_category(const std::vector<Detection>& preds, int category) {
  std::vector<Detection> out;
  for (const Detection& d : preds)
    if (d.category == category) out.push_back(d);
  std::stable_sort(out.begin(), out.end(), ranks_before);
  return out;
}

std::vector<GroundTruth> gts_of_category(const std::vector<GroundTruth>& gts, int category) {
  std::vector<GroundTruth> out;
  for (const GroundTruth& g : gts)
    if (g.category == category) out.push_back(g);
  return canonical_order(std::move(out));
}

// Ranked TP/FP flags for one category across all images, plus n_pos.
std::pair<std::vector<bool>, Index> dataset_flags(const std::vector<ImageRecord>& images, int category,
                                                  double iou_threshold) {
  std::vector<RankedFlag> all;
  Index n_pos = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto preds = ranked_of_category(images[i].preds, category);
    const auto gts = gts_of_category(images[i].gts, category);
    n_pos += static_cast<Index>(gts.size());
    const MatchResult m = match_detections(preds, gts, iou_threshold);
    for (std::size_t p = 0; p < preds.size(); ++p) all.push_back({preds[p], i, m.true_positive[p]});
  }
  std::stable_sort(all.begin(), all.end(), [](const RankedFlag& a, const RankedFlag& b) {
    if (ranks_before(a.det, b.det)) return true;
    if (ranks_before(b.det, a.det)) return false;
    return a.image < b.image;
  });
  std::vector<bool> flags;
  flags.reserve(all.size());
  for (const RankedFlag& r : all) flags.push_back(r.tp);
  return {flags, n_pos};
}

}  // namespace

ApResult dataset_ap(const std::vector<ImageRecord>& images, int category, double iou_threshold,
                    ApMode mode) {
  const auto [flags, n_pos] = dataset_flags(images, category, iou_threshold);
  if (mode == ApMode::kPaper) return ap_paper(flags, n_pos);
  if (n_pos == 0) return {0.0, true};
  return {ap_interp(precision_recall(flags, n_pos)), false};
}

std::vector<double> ConfusionMatrix::normalized() const {
  const int n = num_categories + 1;
  std::vector<double> out(counts.size(), 0.0);
  for (int r = 0; r < n; ++r) {
    long total = 0;
    for (int c = 0; c < n; ++c) total += at(r, c);
    if (total == 0) continue;
    for (int c = 0; c < n; ++c)
      out[static_cast<std::size_t>(r * n + c)] = static_cast<double>(at(r, c)) / static_cast<double>(total);
  }
  return out;
}

ConfusionMatrix confusion_matrix(const std::vector<ImageRecord>& images, int num_categories,
                                 double iou_threshold, double conf_threshold) {
  ConfusionMatrix cm;
  cm.num_categories = num_categories;
  cm.counts.assign(static_cast<std::size_t>((num_categories + 1) * (num_categories + 1)), 0);
  const int bg = cm.background();
  for (const ImageRecord& img : images) {
    std::vector<Detection> preds = filter_confidence(img.preds, conf_threshold);
    std::stable_sort(preds.begin(), preds.end(), ranks_before);
    const std::vector<GroundTruth> gts = canonical_order(img.gts);
    std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);

    auto match_pass = [&](bool same_category) {
      for (std::size_t p = 0; p < preds.size(); ++p) {
        if (pred_used[p]) continue;
        double best = -1.0;
        int best_gt = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
          if (gt_used[g]) continue;
          if (same_category && gts[g].category != preds[p].category) continue;
          const double v = iou(preds[p].box, gts[g].box);
          if (v >= iou_threshold && v > best) {
            best = v;
            best_gt = static_cast<int>(g);
          }
        }
        if (best_gt < 0) continue;
        pred_used[p] = true;
        gt_used[static_cast<std::size_t>(best_gt)] = true;
        ++cm.at(gts[static_cast<std::size_t>(best_gt)].category, preds[p].category);
      }
    };
    match_pass(true);
    match_pass(false);
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (!gt_used[g]) ++cm.at(gts[g].category, bg);
    for (std::size_t p = 0; p < preds.size(); ++p)
      if (!pred_used[p]) ++cm.at(bg, preds[p].category);
  }
  return cm;
}

MetricsReport evaluate(const std::vector<ImageRecord>& images, int num_categories, const EvalOptions& options) {
  MetricsReport report;
  std::vector<double> ap50s, ap5095s;
  const std::vector<double> thresholds = coco_thresholds();
  for (int c = 0; c < num_categories; ++c) {
    CategoryMetrics m;
    m.category = c;
    for (const ImageRecord& img : images) {
      for (const GroundTruth& g : img.gts) m.n_gt += g.category == c;
      for (const Detection& d : img.preds) m.n_pred += d.category == c;
    }
    m.included = m.n_gt > 0 || m.n_pred > 0;
    if (!m.included) {
      report.notes.push_back("category " + std::to_string(c) + " absent from GT and predictions; excluded from mAP");
      report.categories.push_back(m);
      continue;
    }
    if (m.n_gt == 0) {
      report.notes.push_back("category " + std::to_string(c) + " has predictions but no GT; AP = 0");
    }
    m.ap50 = dataset_ap(images, c, options.iou_threshold, options.ap).value;
    double acc = 0;
    for (double t : thresholds) acc += dataset_ap(images, c, t, ApMode::kInterp).value;
    m.ap5095 = acc / static_cast<double>(thresholds.size());

    // Operating point at the confidence threshold.
    std::vector<ImageRecord> filtered = images;
    for (ImageRecord& img : filtered) img.preds = filter_confidence(img.preds, options.conf_threshold);
    const auto [flags, n_pos] = dataset_flags(filtered, c, options.iou_threshold);
    const Index tp = static_cast<Index>(std::count(flags.begin(), flags.end(), true));
    m.precision = flags.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(flags.size());
    m.recall = n_pos > 0 ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0;

    ap50s.push_back(m.ap50);
    ap5095s.push_back(m.ap5095);
    report.categories.push_back(m);
  }
  report.map50 = mean_ap(ap50s);
  report.map5095 = mean_ap(ap5095s);
  report.confusion = confusion_matrix(images, num_categories, options.iou_threshold, options.conf_threshold);
  return report;
}

void write_metrics_csv(std::ostream& os, const MetricsReport& report) {
  char buf[256];
  os << "category,precision,recall,ap50,ap5095\n";
  for (const CategoryMetrics& m : report.categories) {
    if (!m.included) continue;
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", m.category, m.precision, m.recall, m.ap50,
                  m.ap5095);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "mAP50,,,%.6f,\nmAP5095,,,,%.6f\n", report.map50, report.map5095);
  os << buf;
}

void write_confusion_csv(std::ostream& os, const ConfusionMatrix& cm) {
  const int n = cm.num_categories + 1;
  os << "gt\\pred";
  for (int c = 0; c < n; ++c) os << ',' << (c == cm.background() ? std::string("background") : std::to_string(c));
  os << '\n';
  for (int r = 0; r < n; ++r) {
    os << (r == cm.background() ? std::string("background") : std::to_string(r));
    for (int c = 0; c < n; ++c) os << ',' << cm.at(r, c);
    os << '\n';
  }
}

}  // namespace adahead
