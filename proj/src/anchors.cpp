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

#include "adahead/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "adahead/scalar.hpp"

namespace adahead {

double iou(const BoxN& first, const BoxN& second) {
  // Fixed operand order keeps the result symmetric when products get fused.
  const bool swap = std::tie(second.cx, second.cy, second.w, second.h) < std::tie(first.cx, first.cy, first.w, first.h);
  const BoxN& a = swap ? second : first;
  const BoxN& b = swap ? first : second;
  if (a.w <= 0 || a.h <= 0 || b.w <= 0 || b.h <= 0) return 0.0;
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

Index AnchorSet::total() const {
  Index n = 0;
  for (const auto& l : levels) n += l.count();
  return n;
}

int AnchorSet::anchors_per_cell() const {
  return levels.empty() ? 0 : static_cast<int>(levels.front().sizes.size());
}

AnchorLocation AnchorSet::locate(Index anchor) const {
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const AnchorLevel& lv = levels[l];
    if (anchor < lv.first || anchor >= lv.first + lv.count()) continue;
    const Index local = anchor - lv.first;
    const Index b = static_cast<Index>(lv.sizes.size());
    const Index cell = local / b;
    return {static_cast<int>(l), cell % lv.grid_w, cell / lv.grid_w, static_cast<int>(local % b)};
  }
  throw DimensionError("anchor index " + std::to_string(anchor) + " out of range");
}

Index AnchorSet::index(int level, Index ix, Index iy, int b) const {
  const AnchorLevel& lv = levels[static_cast<std::size_t>(level)];
  return lv.first + (iy * lv.grid_w + ix) * static_cast<Index>(lv.sizes.size()) + b;
}

BoxN AnchorSet::anchor_box(Index anchor) const {
  const AnchorLocation loc = locate(anchor);
  const AnchorLevel& lv = levels[static_cast<std::size_t>(loc.level)];
  const AnchorSize s = lv.sizes[static_cast<std::size_t>(loc.b)];
  return {(static_cast<double>(loc.ix) + 0.5) / static_cast<double>(lv.grid_w),
          (static_cast<double>(loc.iy) + 0.5) / static_cast<double>(lv.grid_h), s.w, s.h};
}

AnchorSet dynamic_anchors(Index input_h, Index input_w, const std::vector<int>& strides,
                          const std::vector<double>& scales, const std::vector<double>& aspect_ratios) {
  if (input_h <= 0 || input_w <= 0) throw ConfigError("anchor input dims must be positive");
  if (strides.empty() || scales.empty() || aspect_ratios.empty()) {
    throw ConfigError("anchor strides, scales and ratios must be non-empty");
  }
  for (int s : strides)
    if (s <= 0) throw ConfigError("anchor stride must be positive");
  for (double s : scales)
    if (!(s > 0)) throw ConfigError("anchor scale must be positive");
  for (double r : aspect_ratios)
    if (!(r > 0)) throw ConfigError("anchor aspect ratio must be positive");

  AnchorSet set;
  set.input_h = input_h;
  set.input_w = input_w;
  Index first = 0;
  for (int stride : strides) {
    AnchorLevel lv;
    lv.stride = stride;
    lv.grid_w = (input_w + stride - 1) / stride;
    lv.grid_h = (input_h + stride - 1) / stride;
    for (double scale : scales) {
      for (double ratio : aspect_ratios) {
        const double side = static_cast<double>(stride) * scale;
        const double r = std::sqrt(ratio);
        lv.sizes.push_back({side * r / static_cast<double>(input_w), side / r / static_cast<double>(input_h)});
      }
    }
    lv.first = first;
    first += lv.count();
    set.levels.push_back(std::move(lv));
  }
  return set;
}

BoxN decode_box(Index ix, Index iy, Index grid_w, Index grid_h, AnchorSize anchor, BoxParams t) {
  BoxN b;
  b.cx = (static_cast<double>(ix) + logistic(t.tx)) / static_cast<double>(grid_w);
  b.cy = (static_cast<double>(iy) + logistic(t.ty)) / static_cast<double>(grid_h);
  b.w = std::clamp(anchor.w * std::exp(t.tw), 1e-12, 1.0);
  b.h = std::clamp(anchor.h * std::exp(t.th), 1e-12, 1.0);
  return b;
}

BoxParams encode_box(const BoxN& gt, Index ix, Index iy, Index grid_w, Index grid_h,
                     AnchorSize anchor, double clamp_eps) {
  if (!(gt.w > 0 && gt.h > 0)) throw ValidationError("encode_box: box size must be positive");
  double fx = gt.cx * static_cast<double>(grid_w) - static_cast<double>(ix);
  double fy = gt.cy * static_cast<double>(grid_h) - static_cast<double>(iy);
  // Slack for rounding at cell edges (the product may be fused or not).
  constexpr double kEdgeSlack = 1e-9;
  if (fx < -kEdgeSlack || fx > 1 + kEdgeSlack || fy < -kEdgeSlack || fy > 1 + kEdgeSlack) {
    throw ValidationError("encode_box: center outside cell (" + std::to_string(ix) + "," +
                          std::to_string(iy) + "); assignment bug");
  }
  fx = std::clamp(fx, 0.0, 1.0);
  fy = std::clamp(fy, 0.0, 1.0);
  if (clamp_eps > 0) {
    fx = std::clamp(fx, clamp_eps, 1.0 - clamp_eps);
    fy = std::clamp(fy, clamp_eps, 1.0 - clamp_eps);
  } else if (fx == 0 || fx == 1 || fy == 0 || fy == 1) {
    throw ValidationError("encode_box: center on a cell edge needs clamp_eps > 0");
  }
  return {logit(fx), logit(fy), std::log(gt.w / anchor.w), std::log(gt.h / anchor.h)};
}

Index cell_of(double v, Index n) {
  const double s = v * static_cast<double>(n);
  auto c = static_cast<Index>(std::floor(s));
  if (static_cast<double>(c) == s && c > 0) --c;
  return std::clamp<Index>(c, 0, n - 1);
}

Index Assignment::positives() const {
  return static_cast<Index>(std::count(role.begin(), role.end(), AnchorRole::kPositive));
}

std::vector<GroundTruth> canonical_order(std::vector<GroundTruth> gts) {
  std::stable_sort(gts.begin(), gts.end(), [](const GroundTruth& a, const GroundTruth& b) {
    return std::tie(a.box.cy, a.box.cx, a.category, a.box.w, a.box.h) <
           std::tie(b.box.cy, b.box.cx, b.category, b.box.w, b.box.h);
  });
  return gts;
}

namespace {

double shape_iou(AnchorSize a, const BoxN& g) {
  const double inter = std::min(a.w, g.w) * std::min(a.h, g.h);
  const double uni = a.w * a.h + g.w * g.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace

Assignment assign_targets(const std::vector<GroundTruth>& input, const AnchorSet& anchors,
                          double ignore_threshold) {
  Assignment out;
  out.gts = canonical_order(input);
  const Index total = anchors.total();
  out.matched_gt.assign(static_cast<std::size_t>(total), -1);
  out.role.assign(static_cast<std::size_t>(total), AnchorRole::kNegative);
  out.gt_anchor.assign(out.gts.size(), -1);

  struct Candidate {
    double iou;
    int level;
    int b;
    Index anchor;
  };
  for (std::size_t g = 0; g < out.gts.size(); ++g) {
    const BoxN& box = out.gts[g].box;
    std::vector<Candidate> cands;
    for (std::size_t l = 0; l < anchors.levels.size(); ++l) {
      const AnchorLevel& lv = anchors.levels[l];
      const Index ix = cell_of(box.cx, lv.grid_w);
      const Index iy = cell_of(box.cy, lv.grid_h);
      for (std::size_t b = 0; b < lv.sizes.size(); ++b) {
        cands.push_back({shape_iou(lv.sizes[b], box), static_cast<int>(l), static_cast<int>(b),
                         anchors.index(static_cast<int>(l), ix, iy, static_cast<int>(b))});
      }
    }
    // Best IoU first; ties to the lower level, then the lower base size.
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.iou != b.iou) return a.iou > b.iou;
      if (a.level != b.level) return a.level < b.level;
      return a.b < b.b;
    });
    for (const Candidate& c : cands) {
      const auto ua = static_cast<std::size_t>(c.anchor);
      if (out.matched_gt[ua] >= 0) continue;
      out.matched_gt[ua] = static_cast<int>(g);
      out.role[ua] = AnchorRole::kPositive;
      out.gt_anchor[g] = c.anchor;
      break;
    }
  }

  for (Index a = 0; a < total; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    if (out.role[ua] == AnchorRole::kPositive) continue;
    const BoxN ab = anchors.anchor_box(a);
    for (const GroundTruth& gt : out.gts) {
      if (iou(ab, gt.box) > ignore_threshold) {
        out.role[ua] = AnchorRole::kIgnored;
        break;
      }
    }
  }
  return out;
}

}  // namespace adahead
