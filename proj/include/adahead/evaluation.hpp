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

#ifndef ADAHEAD_EVALUATION_HPP_
#define ADAHEAD_EVALUATION_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "adahead/postprocess.hpp"

namespace adahead {

struct MatchResult {
  std::vector<bool> true_positive;  // per prediction
  std::vector<int> matched_gt;      // per prediction, -1 for false positives
  Index unmatched_gts = 0;
};

// Predictions must already be ranked (score descending). Each prediction
// takes the highest-IoU unmatched GT of its own category with
// IoU >= threshold; every GT is matched at most once.
MatchResult match_detections(const std::vector<Detection>& preds, const std::vector<GroundTruth>& gts,
                             double iou_threshold);

struct PrSeries {
  std::vector<double> precision;
  std::vector<double> recall;
  bool recall_undefined = false;  // n_pos == 0; recall reported as 0
};

// Cumulative precision/recall at every rank.
PrSeries precision_recall(const std::vector<bool>& flags, Index n_pos);

struct ApResult {
  double value = 0;
  bool no_positives = false;
};

// (1 / n_pos) * sum_{r=1..n_pos} precision(r) * recall(r) over the ranked
// detections; ranks past the end of the list contribute zero.
ApResult ap_paper(const std::vector<bool>& flags, Index n_pos);

// 101-point interpolated AP: mean over recall grid {0, 0.01, .., 1} of the
// best precision reached at recall >= grid point.
double ap_interp(const PrSeries& series);

// Mean of per-category APs.
double mean_ap(const std::vector<double>& aps);

enum class ApMode { kPaper, kInterp };

struct ImageRecord {
  std::vector<Detection> preds;
  std::vector<GroundTruth> gts;
};

struct ConfusionMatrix {
  int num_categories = 0;
  // (n + 1) x (n + 1), rows = GT category, cols = predicted category; the
  // last row / column is background (unmatched predictions / missed GTs).
  std::vector<long> counts;

  long at(int gt, int pred) const {
    return counts[static_cast<std::size_t>(gt * (num_categories + 1) + pred)];
  }
  long& at(int gt, int pred) { return counts[static_cast<std::size_t>(gt * (num_categories + 1) + pred)]; }
  int background() const { return num_categories; }
  // Each GT row divided by its GT total (rows with no entries stay zero).
  std::vector<double> normalized() const;
};

// Same-category matches first (these form the diagonal), then leftover
// predictions matched to leftover GTs of any category (off-diagonal).
ConfusionMatrix confusion_matrix(const std::vector<ImageRecord>& images, int num_categories,
                                 double iou_threshold, double conf_threshold);

struct EvalOptions {
  ApMode ap = ApMode::kInterp;
  double conf_threshold = kDefaultConfidence;  // for precision/recall and confusion
  double iou_threshold = 0.5;
};

struct CategoryMetrics {
  int category = 0;
  Index n_gt = 0;
  Index n_pred = 0;
  double precision = 0;
  double recall = 0;
  double ap50 = 0;
  double ap5095 = 0;
  bool included = false;
};

struct MetricsReport {
  std::vector<CategoryMetrics> categories;
  double map50 = 0;
  double map5095 = 0;
  ConfusionMatrix confusion;
  std::vector<std::string> notes;
};

// IoU thresholds 0.50:0.05:0.95.
std::vector<double> coco_thresholds();

// Per-category AP at one IoU threshold over the whole dataset.
ApResult dataset_ap(const std::vector<ImageRecord>& images, int category, double iou_threshold,
                    ApMode mode);

MetricsReport evaluate(const std::vector<ImageRecord>& images, int num_categories,
                       const EvalOptions& options = {});

void write_metrics_csv(std::ostream& os, const MetricsReport& report);
void write_confusion_csv(std::ostream& os, const ConfusionMatrix& cm);

}  // namespace adahead

#endif  // ADAHEAD_EVALUATION_HPP_
