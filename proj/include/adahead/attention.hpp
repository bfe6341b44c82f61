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

#ifndef ADAHEAD_ATTENTION_HPP_
#define ADAHEAD_ATTENTION_HPP_

#include <optional>
#include <vector>

#include "adahead/ops.hpp"

namespace adahead {

// L pyramid maps [H_l, W_l, C] plus the stacked common view [L, Hm, Wm, C]
// resampled to the median level's resolution.
struct PyramidFeatures {
  std::vector<Var> levels;
  Var common;
  Index median_level = 0;
};

// Median level of an L-level pyramid; ties resolve to the lower index.
inline Index median_level(Index levels) { return (levels - 1) / 2; }

template <typename Scalar>
PyramidFeatures make_pyramid(Tape<Scalar>& tape, const std::vector<Var>& levels);

// Handles of the attention parameters on a tape.
struct DvfVars {
  Var scale_w, scale_b;    // f(.): 1x1 conv, kernel [1,1,1,1], bias [1]
  Var offset_w, offset_b;  // 3x3 conv C -> 4K on the median level
  Var theta_w1, theta_b1;  // [C, C/r]
  Var theta_w2, theta_b2;  // [C/r, 4C]
  int sampling_points = 9;
  // Replaces the hyper-function output with fixed (a1,a2,b1,b2) rows [C,4].
  std::optional<Var> forced_theta;
};

// Offsets [H,W,K,2], masks in [0,1] [H,W,K], weights [H,W,K].
struct SamplingField {
  Var offsets, masks, weights;
};

// F x hard_sigmoid(f(mean_{S,C} F)) with one scalar gate per level.
template <typename Scalar>
Var scale_attention(Tape<Scalar>& tape, Var features, Var scale_w, Var scale_b);

// Sampling field predicted by a 3x3 conv on the median level of F. K must be
// an odd square; the conv output adds to the centered sqrt(K) x sqrt(K) grid.
template <typename Scalar>
SamplingField predict_sampling(Tape<Scalar>& tape, Var features, Index median, Var offset_w,
                               Var offset_b, int sampling_points);

// Level-averaged sparse aggregate broadcast back over L.
template <typename Scalar>
Var spatial_attention(Tape<Scalar>& tape, Var features, const SamplingField& field);

// theta(F): global pooling over L and S, affine, standardization, affine,
// shifted sigmoid. Returns [C,4] rows (a1, a2, b1, b2).
template <typename Scalar>
Var task_params(Tape<Scalar>& tape, Var features, Var w1, Var b1, Var w2, Var b2);

// max(F_c * a1 + b1, F_c * a2 + b2) per channel.
template <typename Scalar>
Var task_attention(Tape<Scalar>& tape, Var features, Var theta);

// task(spatial(scale(F))) with nothing interposed between the stages.
template <typename Scalar>
Var dvf_apply(Tape<Scalar>& tape, Var features, Index median, const DvfVars& params);

struct MultiScaleVars {
  Var k1, b1, k3, b3, k5, b5;
};

// Sum of parallel 1x1, 3x3, 5x5 "same" convolutions; x is [1,H,W,C].
template <typename Scalar>
Var multiscale_conv(Tape<Scalar>& tape, Var x, const MultiScaleVars& p);

struct JgrVars {
  MultiScaleVars cls_ms;
  Var cls_w, cls_b;  // 1x1, C -> B * (n_categories + 1)
  MultiScaleVars box_ms;
  Var box_w, box_b;  // 1x1, C -> B * 4
  int anchors_per_cell = 3;
  int num_categories = 3;
  float branch_slope = 0.1f;
};

// Per-anchor head outputs for one pyramid level, anchors ordered (y, x, b).
template <typename Scalar>
struct HeadOutput {
  Var class_logits;  // [A, n_categories]
  Var objectness;    // [A, 1]
  Var box_params;    // [A, 4] (tx, ty, tw, th)
  Tensor<Scalar> joint_score;  // [A, n_categories]
};

// Joint score of one anchor/category pair.
template <typename Scalar>
Scalar joint_score(Scalar class_logit, Scalar objectness_logit);

// Two branches with no shared layers after the attention stack.
template <typename Scalar>
HeadOutput<Scalar> jgr_forward(Tape<Scalar>& tape, Var features, const JgrVars& p,
                               bool box_branch_first = false);

}  // namespace adahead

#endif  // ADAHEAD_ATTENTION_HPP_
