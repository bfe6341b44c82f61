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

#include "adahead/postprocess.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

namespace adahead {

std::vector<Detection> filter_confidence(const std::vector<Detection>& dets, double threshold) {
  std::vector<Detection> out;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(out),
               [threshold](const Detection& d) { return d.score >= threshold; });
  return out;
}

bool ranks_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.box.cy, a.box.cx, a.box.w, a.box.h, a.category) <
         std::tie(b.box.cy, b.box.cx, b.box.w, b.box.h, b.category);
}

std::vector<std::size_t> nms(const std::vector<Detection>& dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ranks_before(dets[a], dets[b]); });
  std::vector<bool> suppressed(dets.size(), false);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t cur = order[i];
    if (suppressed[cur]) continue;
    kept.push_back(cur);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t other = order[j];
      if (suppressed[other] || dets[other].category != dets[cur].category) continue;
      if (iou(dets[cur].box, dets[other].box) > iou_threshold) suppressed[other] = true;
    }
  }
  return kept;
}

std::string format_detection(const Detection& d) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d %.6g %.6g %.6g %.6g %.6g", d.category, d.score, d.box.cx,
                d.box.cy, d.box.w, d.box.h);
  return buf;
}

void write_detections(std::ostream& os, const std::vector<Detection>& dets) {
  for (const Detection& d : dets) os << format_detection(d) << '\n';
}

std::vector<Detection> read_detections(std::istream& is) {
  std::vector<Detection> out;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Detection d;
    if (!(ls >> d.category >> d.score >> d.box.cx >> d.box.cy >> d.box.w >> d.box.h)) {
      throw ParseError("malformed detection line", n);
    }
    std::string extra;
    if (ls >> extra) throw ParseError("trailing fields in detection line", n);
    out.push_back(d);
  }
  return out;
}

}  // namespace adahead
