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

#ifndef ADAHEAD_ANCHORS_HPP_
#define ADAHEAD_ANCHORS_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "adahead/tensor.hpp"

namespace adahead {

// Center-format box, every field a fraction of the image width/height.
struct BoxN {
  double cx = 0, cy = 0, w = 0, h = 0;

  double x0() const { return cx - 0.5 * w; }
  double y0() const { return cy - 0.5 * h; }
  double x1() const { return cx + 0.5 * w; }
  double y1() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  static BoxN from_corners(double x0, double y0, double x1, double y1) {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
  }
  friend bool operator==(const BoxN&, const BoxN&) = default;
};

struct GroundTruth {
  int category = 0;
  BoxN box;
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// Intersection over union; 0 when either box has zero area.
double iou(const BoxN& a, const BoxN& b);

struct AnchorSize {
  double w, h;  // normalized
};

struct AnchorLevel {
  int stride = 0;
  Index grid_w = 0, grid_h = 0;
  std::vector<AnchorSize> sizes;
  Index first = 0;  // flat index of this level's first anchor

  Index count() const { return grid_w * grid_h * static_cast<Index>(sizes.size()); }
};

// Flat anchor order: level, then cell row, cell column, base size.
struct AnchorLocation {
  int level;
  Index ix, iy;
  int b;
};

struct AnchorSet {
  Index input_h = 0, input_w = 0;
  std::vector<AnchorLevel> levels;

  Index total() const;
  int anchors_per_cell() const;
  AnchorLocation locate(Index anchor) const;
  Index index(int level, Index ix, Index iy, int b) const;
  // Anchor box placed at the center of its cell.
  BoxN anchor_box(Index anchor) const;
};

// Base boxes of pixel size stride * scale with the given w/h ratios,
// normalized by the input dims; grids are ceil(input / stride).
AnchorSet dynamic_anchors(Index input_h, Index input_w, const std::vector<int>& strides,
                          const std::vector<double>& scales, const std::vector<double>& aspect_ratios);

struct BoxParams {
  double tx = 0, ty = 0, tw = 0, th = 0;
};

// cx = (ix + logistic(tx)) / S_x, w = anchor_w * exp(tw) clamped to (0, 1].
BoxN decode_box(Index ix, Index iy, Index grid_w, Index grid_h, AnchorSize anchor, BoxParams t);

// Inverse of decode_box. The center must lie inside cell (ix, iy). With
// clamp_eps > 0 the in-cell fraction is clamped to [eps, 1 - eps], which is
// how training targets stay finite for centers on a cell edge.
BoxParams encode_box(const BoxN& gt, Index ix, Index iy, Index grid_w, Index grid_h,
                     AnchorSize anchor, double clamp_eps = 0.0);

// Cell containing normalized coordinate v on a grid of n cells; a value on a
// boundary goes to the lower cell.
Index cell_of(double v, Index n);

enum class AnchorRole : std::uint8_t { kNegative = 0, kPositive = 1, kIgnored = 2 };

struct Assignment {
  std::vector<GroundTruth> gts;       // canonical order
  std::vector<Index> gt_anchor;       // anchor per gt, -1 if none was free
  std::vector<int> matched_gt;        // per anchor, -1 if unmatched
  std::vector<AnchorRole> role;       // per anchor

  Index positives() const;
};

// Sorts GTs by (cy, cx, category, w, h) so the result does not depend on the
// input order.
std::vector<GroundTruth> canonical_order(std::vector<GroundTruth> gts);

Assignment assign_targets(const std::vector<GroundTruth>& gts, const AnchorSet& anchors,
                          double ignore_threshold = 0.5);

}  // namespace adahead

#endif  // ADAHEAD_ANCHORS_HPP_
