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

#include "adahead/attention.hpp"

#include <cmath>
#include <string>

#include "adahead/scalar.hpp"

namespace adahead {

template <typename Scalar>
PyramidFeatures make_pyramid(Tape<Scalar>& tape, const std::vector<Var>& levels) {
  if (levels.empty()) throw ConfigError("pyramid needs at least one level");
  PyramidFeatures p;
  p.levels = levels;
  p.median_level = median_level(static_cast<Index>(levels.size()));
  const Tensor<Scalar>& med = tape.value(levels[static_cast<std::size_t>(p.median_level)]);
  if (med.rank() != 3) throw DimensionError("pyramid level must be [H,W,C], got " + shape_string(med.shape()));
  std::vector<Var> rows;
  for (Var l : levels) {
    const Tensor<Scalar>& v = tape.value(l);
    if (v.rank() != 3 || v.dim(2) != med.dim(2)) {
      throw DimensionError("pyramid levels must share channel count C=" + std::to_string(med.dim(2)) +
                           ", got " + shape_string(v.shape()));
    }
    rows.push_back(resize_bilinear(tape, l, med.dim(0), med.dim(1)));
  }
  p.common = stack(tape, rows);
  return p;
}

template <typename Scalar>
Var scale_attention(Tape<Scalar>& tape, Var features, Var scale_w, Var scale_b) {
  const Tensor<Scalar>& f = tape.value(features);
  if (f.rank() != 4) throw DimensionError("scale_attention: F must be [L,H,W,C]");
  const Index levels = f.dim(0);
  Var means = reduce_mean(tape, features, {1, 2, 3}, true);        // [L,1,1,1]
  Var as_map = reshape(tape, means, Shape{1, levels, 1, 1});       // NHWC, one channel
  Var fx = conv2d(tape, as_map, scale_w, scale_b, Conv2dOptions{});
  Var gate = hard_sigmoid(tape, reshape(tape, fx, Shape{levels, 1, 1, 1}));
  return mul_broadcast(tape, features, gate);
}

template <typename Scalar>
SamplingField predict_sampling(Tape<Scalar>& tape, Var features, Index median, Var offset_w,
                               Var offset_b, int sampling_points) {
  if (sampling_points <= 0) throw ConfigError("spatial attention: K must be positive");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(sampling_points))));
  if (side * side != sampling_points || side % 2 == 0) {
    throw ConfigError("spatial attention: K must be an odd square, got " + std::to_string(sampling_points));
  }
  const Tensor<Scalar>& f = tape.value(features);
  const Index h = f.dim(1), w = f.dim(2), c = f.dim(3);
  const Index k = sampling_points;
  Var level = reshape(tape, select(tape, features, median), Shape{1, h, w, c});
  Var raw = conv2d(tape, level, offset_w, offset_b, Conv2dOptions::same(3));
  if (tape.value(raw).dim(3) != 4 * k) {
    throw DimensionError("offset conv must emit 4K=" + std::to_string(4 * k) + " channels, got " +
                         std::to_string(tape.value(raw).dim(3)));
  }
  Tensor<Scalar> base({h, w, k, 2}, Scalar(0));
  const int r = side / 2;
  for (Index p = 0; p < h * w; ++p) {
    for (int s = 0; s < sampling_points; ++s) {
      base[(p * k + s) * 2] = static_cast<Scalar>(s / side - r);
      base[(p * k + s) * 2 + 1] = static_cast<Scalar>(s % side - r);
    }
  }
  SamplingField field;
  Var delta = reshape(tape, slice_last(tape, raw, 0, 2 * k), Shape{h, w, k, 2});
  field.offsets = add_constant(tape, delta, base);
  field.masks = hard_sigmoid(tape, reshape(tape, slice_last(tape, raw, 2 * k, 3 * k), Shape{h, w, k}));
  field.weights = reshape(tape, slice_last(tape, raw, 3 * k, 4 * k), Shape{h, w, k});
  return field;
}

template <typename Scalar>
Var spatial_attention(Tape<Scalar>& tape, Var features, const SamplingField& field) {
  return deform_aggregate(tape, features, field.offsets, field.masks, field.weights);
}

template <typename Scalar>
Var task_params(Tape<Scalar>& tape, Var features, Var w1, Var b1, Var w2, Var b2) {
  const Tensor<Scalar>& f = tape.value(features);
  const Index c = f.shape().back();
  Var pooled = reshape(tape, reduce_mean(tape, features, {0, 1, 2}, false), Shape{1, c});
  Var hidden = standardize(tape, affine(tape, pooled, w1, b1), Scalar(1e-5));
  Var out = shifted_sigmoid(tape, affine(tape, hidden, w2, b2));
  return reshape(tape, out, Shape{c, 4});
}

template <typename Scalar>
Var task_attention(Tape<Scalar>& tape, Var features, Var theta) {
  return dynamic_relu(tape, features, theta);
}

template <typename Scalar>
Var dvf_apply(Tape<Scalar>& tape, Var features, Index median, const DvfVars& params) {
  Var scaled = scale_attention(tape, features, params.scale_w, params.scale_b);
  const SamplingField field =
      predict_sampling(tape, scaled, median, params.offset_w, params.offset_b, params.sampling_points);
  Var spatial = spatial_attention(tape, scaled, field);
  Var theta = params.forced_theta
                  ? *params.forced_theta
                  : task_params(tape, spatial, params.theta_w1, params.theta_b1, params.theta_w2,
                                params.theta_b2);
  return task_attention(tape, spatial, theta);
}

template <typename Scalar>
Var multiscale_conv(Tape<Scalar>& tape, Var x, const MultiScaleVars& p) {
  Var y1 = conv2d(tape, x, p.k1, p.b1, Conv2dOptions::same(1));
  Var y3 = conv2d(tape, x, p.k3, p.b3, Conv2dOptions::same(3));
  Var y5 = conv2d(tape, x, p.k5, p.b5, Conv2dOptions::same(5));
  return add(tape, add(tape, y1, y3), y5);
}

template <typename Scalar>
Scalar joint_score(Scalar class_logit, Scalar objectness_logit) {
  return logistic(class_logit) * logistic(objectness_logit);
}

namespace {

template <typename Scalar>
Var run_branch(Tape<Scalar>& tape, Var x, const MultiScaleVars& ms, Var w, Var b, Scalar slope) {
  Var hidden = leaky_relu(tape, multiscale_conv(tape, x, ms), slope);
  return conv2d(tape, hidden, w, b, Conv2dOptions{});
}

}  // namespace

template <typename Scalar>
HeadOutput<Scalar> jgr_forward(Tape<Scalar>& tape, Var features, const JgrVars& p,
                               bool box_branch_first) {
  const Tensor<Scalar>& f = tape.value(features);
  if (f.rank() != 4 || f.dim(0) != 1) {
    throw DimensionError("jgr_forward: features must be [1,H,W,C], got " + shape_string(f.shape()));
  }
  const Index cells = f.dim(1) * f.dim(2);
  const Index b = p.anchors_per_cell;
  const Index n = p.num_categories;
  const Index anchors = cells * b;
  const Scalar slope = static_cast<Scalar>(p.branch_slope);

  auto cls_branch = [&] {
    Var raw = run_branch(tape, features, p.cls_ms, p.cls_w, p.cls_b, slope);
    if (tape.value(raw).dim(3) != b * (n + 1)) {
      throw ConfigError("class branch emits " + std::to_string(tape.value(raw).dim(3)) +
                        " channels, anchor config needs " + std::to_string(b * (n + 1)));
    }
    return reshape(tape, raw, Shape{anchors, n + 1});
  };
  auto box_branch = [&] {
    Var raw = run_branch(tape, features, p.box_ms, p.box_w, p.box_b, slope);
    if (tape.value(raw).dim(3) != b * 4) {
      throw ConfigError("box branch emits " + std::to_string(tape.value(raw).dim(3)) +
                        " channels, anchor config needs " + std::to_string(b * 4));
    }
    return reshape(tape, raw, Shape{anchors, 4});
  };

  Var cls_raw, box_raw;
  if (box_branch_first) {
    box_raw = box_branch();
    cls_raw = cls_branch();
  } else {
    cls_raw = cls_branch();
    box_raw = box_branch();
  }

  HeadOutput<Scalar> out;
  out.class_logits = slice_last(tape, cls_raw, 0, n);
  out.objectness = slice_last(tape, cls_raw, n, n + 1);
  out.box_params = box_raw;
  const Tensor<Scalar>& logits = tape.value(out.class_logits);
  const Tensor<Scalar>& obj = tape.value(out.objectness);
  out.joint_score = Tensor<Scalar>({anchors, n});
  for (Index a = 0; a < anchors; ++a)
    for (Index c = 0; c < n; ++c)
      out.joint_score[a * n + c] = joint_score(logits[a * n + c], obj[a]);
  return out;
}

#define ADAHEAD_INSTANTIATE_ATTENTION(S)                                                  \
  template PyramidFeatures make_pyramid(Tape<S>&, const std::vector<Var>&);              \
  template Var scale_attention(Tape<S>&, Var, Var, Var);                                 \
  template SamplingField predict_sampling(Tape<S>&, Var, Index, Var, Var, int);          \
  template Var spatial_attention(Tape<S>&, Var, const SamplingField&);                   \
  template Var task_params(Tape<S>&, Var, Var, Var, Var, Var);                           \
  template Var task_attention(Tape<S>&, Var, Var);                                       \
  template Var dvf_apply(Tape<S>&, Var, Index, const DvfVars&);                          \
  template Var multiscale_conv(Tape<S>&, Var, const MultiScaleVars&);                    \
  template S joint_score(S, S);                                                          \
  template HeadOutput<S> jgr_forward(Tape<S>&, Var, const JgrVars&, bool);

ADAHEAD_INSTANTIATE_ATTENTION(float)
ADAHEAD_INSTANTIATE_ATTENTION(double)

}  // namespace adahead
