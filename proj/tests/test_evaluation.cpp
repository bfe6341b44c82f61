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


#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "adahead/evaluation.hpp"
#include "adahead/rng.hpp"
#include "oracles.hpp"

using namespace adahead;

namespace {

const std::vector<bool> kTT{true, true}, kTFT{true, false, true};

// Random image: GTs and jittered predictions of them plus clutter.
ImageRecord random_image(Rng& rng, int cats) {
  ImageRecord img;
  const int n = static_cast<int>(rng.below(6));
  for (int i = 0; i < n; ++i) {
    GroundTruth g{static_cast<int>(rng.below(static_cast<std::uint64_t>(cats))),
                  {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)}};
    img.gts.push_back(g);
    if (rng.uniform() < 0.8) {
      Detection d{g.box, g.category, rng.uniform()};
      d.box.cx += rng.uniform(-0.03, 0.03);
      d.box.cy += rng.uniform(-0.03, 0.03);
      if (rng.uniform() < 0.15) d.category = static_cast<int>(rng.below(static_cast<std::uint64_t>(cats)));
      img.preds.push_back(d);
    }
  }
  const int clutter = static_cast<int>(rng.below(3));
  for (int i = 0; i < clutter; ++i) {
    img.preds.push_back({{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)},
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(cats))),
                         rng.uniform()});
  }
  return img;
}

std::vector<ImageRecord> random_dataset(std::uint64_t seed, int images, int cats) {
  Rng rng(seed);
  std::vector<ImageRecord> out;
  for (int i = 0; i < images; ++i) out.push_back(random_image(rng, cats));
  return out;
}

}  // namespace

TEST_CASE("matching examples") {
  const GroundTruth g{0, BoxN::from_corners(0, 0, 2, 2)};
  const MatchResult one = match_detections({{g.box, 0, 0.9}}, {g}, 0.5);
  CHECK(one.true_positive == std::vector<bool>{true});
  CHECK(one.unmatched_gts == 0);

  const MatchResult two = match_detections({{g.box, 0, 0.9}, {g.box, 0, 0.8}}, {g}, 0.5);
  CHECK(two.true_positive == std::vector<bool>{true, false});
  CHECK(two.matched_gt == std::vector<int>{0, -1});

  // Shifted by 0.62 along x: IoU = 1.38 / 2.62 = 0.527; by 0.76: 1.24 / 2.76 = 0.449.
  const BoxN near = BoxN::from_corners(0.62, 0, 2.62, 2), far = BoxN::from_corners(0.76, 0, 2.76, 2);
  CHECK(iou(far, g.box) == doctest::Approx(0.4493).epsilon(1e-3));
  CHECK(match_detections({{near, 0, 0.9}}, {g}, 0.5).true_positive == std::vector<bool>{true});
  const MatchResult miss = match_detections({{far, 0, 0.9}}, {g}, 0.5);
  CHECK(miss.true_positive == std::vector<bool>{false});
  CHECK(miss.unmatched_gts == 1);

  CHECK(match_detections({{g.box, 1, 0.9}}, {g}, 0.5).true_positive == std::vector<bool>{false});
}

TEST_CASE("precision and recall series") {
  std::vector<bool> eight_two(10, true);
  eight_two[3] = eight_two[7] = false;
  CHECK(precision_recall(eight_two, 8).precision.back() == doctest::Approx(0.8).epsilon(1e-15));

  const PrSeries tt = precision_recall(kTT, 2);
  CHECK(tt.recall == std::vector<double>{0.5, 1.0});
  const PrSeries tft = precision_recall(kTFT, 2);
  CHECK(tft.precision[0] == 1);
  CHECK(tft.precision[1] == 0.5);
  CHECK(tft.precision[2] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(tft.recall == std::vector<double>{0.5, 0.5, 1.0});

  const PrSeries none = precision_recall({false, true}, 0);
  CHECK(none.recall_undefined);
  CHECK(none.recall == std::vector<double>{0, 0});
}

TEST_CASE("paper AP examples") {
  CHECK(ap_paper({true}, 1).value == 1);
  CHECK(ap_paper(kTT, 2).value == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(ap_paper(kTFT, 2).value == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(ap_paper({true}, 3).value == doctest::Approx(1.0 / 9).epsilon(1e-15));  // missing ranks add zero
  const ApResult empty = ap_paper({false}, 0);
  CHECK(empty.no_positives);
  CHECK(empty.value == 0);
}

TEST_CASE("interpolated AP examples") {
  CHECK(ap_interp(precision_recall({true, true, true}, 3)) == doctest::Approx(1).epsilon(1e-15));
  CHECK(ap_interp(precision_recall({false, false}, 3)) == 0);
  CHECK(ap_interp(PrSeries{}) == 0);
  const double v = ap_interp(precision_recall(kTFT, 2));
  CHECK(v == doctest::Approx((51 + 50 * (2.0 / 3)) / 101).epsilon(1e-14));
  CHECK(v == doctest::Approx(0.8350).epsilon(1e-4));
}

TEST_CASE("both AP forms match their grid-by-grid references") {
  Rng rng(51);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<bool> flags(rng.below(30));
    long tp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) tp += (flags[i] = rng.uniform() < 0.6);
    const long n_pos = tp + static_cast<long>(rng.below(5));
    if (n_pos == 0) continue;
    CHECK(ap_interp(precision_recall(flags, n_pos)) == doctest::Approx(oracle::ap_interp(flags, n_pos)).epsilon(1e-12));
    CHECK(ap_paper(flags, n_pos).value == doctest::Approx(oracle::ap_paper(flags, n_pos)).epsilon(1e-12));
  }
}

TEST_CASE("AP properties") {
  Rng rng(52);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<bool> flags(rng.below(20));
    long tp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) tp += (flags[i] = rng.uniform() < 0.5);
    const long n_pos = tp + 1 + static_cast<long>(rng.below(3));
    const double base = ap_interp(precision_recall(flags, n_pos));
    CHECK(base >= 0);
    CHECK(base <= 1);
    const double paper = ap_paper(flags, n_pos).value;
    CHECK(paper >= 0);
    CHECK(paper <= 1);
    std::vector<bool> more = flags;
    more.push_back(true);
    CHECK(ap_interp(precision_recall(more, n_pos)) >= base);
  }
  for (std::size_t n = 1; n < 12; ++n) {
    const std::vector<bool> perfect(n, true), bad(n, false);
    const auto np = static_cast<Index>(n);
    CHECK(ap_interp(precision_recall(perfect, np)) == doctest::Approx(1).epsilon(1e-15));
    // The literal sum scores a perfect list (n + 1) / (2n); only n = 1 reaches 1.
    CHECK(ap_paper(perfect, np).value == doctest::Approx((np + 1.0) / (2.0 * np)).epsilon(1e-15));
    CHECK(ap_interp(precision_recall(bad, np)) == 0);
    CHECK(ap_paper(bad, np).value == 0);
  }
}

TEST_CASE("mean AP") {
  CHECK(mean_ap({0.6}) == 0.6);
  CHECK(mean_ap({1.0, 0.5}) == 0.75);
  const double a = ap_paper({true}, 1).value, b = ap_paper(kTT, 2).value, c = ap_paper(kTFT, 2).value;
  CHECK(mean_ap({a, b, c}) == doctest::Approx((1 + 0.75 + 0.375) / 3).epsilon(1e-15));
  CHECK(coco_thresholds().size() == 10);
  CHECK(coco_thresholds().front() == 0.5);
  CHECK(coco_thresholds().back() == 0.95);
}

TEST_CASE("dataset evaluation on hand-built images") {
  // Category 0: one image with [TP, FP, TP] ranking over two GTs.
  const BoxN g1{0.2, 0.2, 0.1, 0.1}, g2{0.7, 0.7, 0.1, 0.1};
  ImageRecord img;
  img.gts = {{0, g1}, {0, g2}, {1, {0.5, 0.2, 0.2, 0.2}}};
  img.preds = {{g1, 0, 0.9}, {{0.4, 0.8, 0.1, 0.1}, 0, 0.8}, {g2, 0, 0.7}, {{0.5, 0.2, 0.2, 0.2}, 1, 0.6}};
  EvalOptions paper;
  paper.ap = ApMode::kPaper;
  paper.conf_threshold = 0.5;
  const MetricsReport r = evaluate({img}, 3, paper);
  CHECK(r.categories[0].ap50 == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(r.categories[1].ap50 == 1);
  CHECK_FALSE(r.categories[2].included);
  CHECK(r.map50 == doctest::Approx((0.375 + 1) / 2).epsilon(1e-15));
  CHECK(r.categories[0].precision == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.categories[0].recall == 1);
  CHECK(r.notes.size() == 1);

  const MetricsReport ri = evaluate({img}, 3);
  CHECK(ri.categories[0].ap50 == doctest::Approx(0.8350).epsilon(1e-4));

  std::ostringstream os;
  write_metrics_csv(os, r);
  CHECK(os.str().rfind("category,precision,recall,ap50,ap5095\n0,", 0) == 0);
  CHECK(os.str().find("mAP50,,,0.687500,") != std::string::npos);
}

TEST_CASE("confusion matrix examples") {
  const GroundTruth a{0, {0.3, 0.3, 0.2, 0.2}}, b{1, {0.7, 0.7, 0.2, 0.2}};
  const ConfusionMatrix perfect = confusion_matrix({{{{a.box, 0, 0.9}, {b.box, 1, 0.9}}, {a, b}}}, 2, 0.5, 0.25);
  CHECK(perfect.at(0, 0) == 1);
  CHECK(perfect.at(1, 1) == 1);
  long off = 0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) off += r == c ? 0 : perfect.at(r, c);
  CHECK(off == 0);

  const ConfusionMatrix none = confusion_matrix({{{}, {a, b}}}, 2, 0.5, 0.25);
  CHECK(none.at(0, 2) == 1);
  CHECK(none.at(1, 2) == 1);

  // Predicted as category 1 over a category-0 box at IoU 0.6.
  BoxN shifted = a.box;
  shifted.cx += 0.05;  // overlap 0.15 x 0.2 over union 0.05 -> 0.6
  CHECK(iou(shifted, a.box) == doctest::Approx(0.6).epsilon(1e-12));
  const ConfusionMatrix cross = confusion_matrix({{{{shifted, 1, 0.9}}, {a}}}, 2, 0.5, 0.25);
  long total = 0;
  for (long v : cross.counts) total += v;
  CHECK(total == 1);
  CHECK(cross.at(0, 1) == 1);

  const auto norm = perfect.normalized();
  CHECK(norm[0] == 1.0);
  CHECK(norm[8] == 0.0);
  std::ostringstream os;
  write_confusion_csv(os, cross);
  CHECK(os.str() == "gt\\pred,0,1,background\n0,0,1,0\n1,0,0,0\nbackground,0,0,0\n");
}

TEST_CASE("confusion totals reconcile with matching counts") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto data = random_dataset(seed, 8, 3);
    const double conf = 0.3;
    const ConfusionMatrix cm = confusion_matrix(data, 3, 0.5, conf);
    long diag = 0, tp = 0;
    for (int c = 0; c < 3; ++c) diag += cm.at(c, c);
    for (int c = 0; c < 3; ++c) {
      long n_gt = 0, n_pred = 0, row = 0, col = 0;
      for (const ImageRecord& img : data) {
        std::vector<Detection> p;
        for (const Detection& d : img.preds)
          if (d.category == c && d.score >= conf) p.push_back(d);
        std::stable_sort(p.begin(), p.end(), ranks_before);
        std::vector<GroundTruth> g;
        for (const GroundTruth& x : img.gts)
          if (x.category == c) g.push_back(x);
        n_gt += static_cast<long>(g.size());
        n_pred += static_cast<long>(p.size());
        const MatchResult m = match_detections(p, canonical_order(g), 0.5);
        tp += std::count(m.true_positive.begin(), m.true_positive.end(), true);
      }
      for (int k = 0; k <= 3; ++k) {
        row += cm.at(c, k);
        col += cm.at(k, c);
      }
      CHECK(row == n_gt);
      CHECK(col == n_pred);
    }
    CHECK(diag == tp);
  }
}

TEST_CASE("evaluation ignores image-internal ordering") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto data = random_dataset(100 + seed, 10, 3);
    const MetricsReport ref = evaluate(data, 3);
    Rng rng(seed);
    for (ImageRecord& img : data) {
      rng.shuffle(img.preds);
      rng.shuffle(img.gts);
    }
    const MetricsReport got = evaluate(data, 3);
    CHECK(got.map50 == ref.map50);
    CHECK(got.map5095 == ref.map5095);
    CHECK(got.confusion.counts == ref.confusion.counts);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(got.categories[c].precision == ref.categories[c].precision);
      CHECK(got.categories[c].recall == ref.categories[c].recall);
    }
    CHECK(ref.map50 >= 0);
    CHECK(ref.map50 <= 1);
  }
}
