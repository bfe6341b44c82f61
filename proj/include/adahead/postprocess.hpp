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

#ifndef ADAHEAD_POSTPROCESS_HPP_
#define ADAHEAD_POSTPROCESS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "adahead/anchors.hpp"

namespace adahead {

struct Detection {
  BoxN box;
  int category = 0;
  double score = 0;  // joint score in [0, 1]
  friend bool operator==(const Detection&, const Detection&) = default;
};

inline constexpr double kDefaultConfidence = 0.25;
inline constexpr double kDefaultNmsIou = 0.45;

// Keeps detections with score >= threshold, preserving order.
std::vector<Detection> filter_confidence(const std::vector<Detection>& dets, double threshold);

// Strict weak order used for ranking: score descending, then
// (cy, cx, w, h, category) ascending.
bool ranks_before(const Detection& a, const Detection& b);

// Greedy per-category suppression. Returns kept indices in rank order.
std::vector<std::size_t> nms(const std::vector<Detection>& dets, double iou_threshold);

// One detection per line: "category score cx cy w h", 6 significant digits.
void write_detections(std::ostream& os, const std::vector<Detection>& dets);
std::vector<Detection> read_detections(std::istream& is);
std::string format_detection(const Detection& d);

}  // namespace adahead

#endif  // ADAHEAD_POSTPROCESS_HPP_
