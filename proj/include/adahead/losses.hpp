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

#ifndef ADAHEAD_LOSSES_HPP_
#define ADAHEAD_LOSSES_HPP_

#include <vector>

#include "adahead/anchors.hpp"
#include "adahead/tape.hpp"

namespace adahead {

enum class ObjectnessTarget { kIou, kOne, kNone };

struct LossConfig {
  double lambda_coord = 5.0;
  double lambda_noobj = 0.5;
  double gamma = 2.0;
  std::vector<double> alpha;  // one weight per category
  bool use_focal_cls = true;
  // Target of the squared confidence error on positive anchors.
  ObjectnessTarget objectness_target = ObjectnessTarget::kIou;

  void validate(int num_categories) const;
};

struct LossBreakdown {
  double cls = 0, coord = 0, noobj = 0, total = 0;
};

inline constexpr double kProbabilityFloor = 1e-12;

// alpha_t = sum(w) / w_t.
std::vector<double> class_weights(const std::vector<double>& w);

// -alpha (1 - p)^gamma log(p). p below the floor is clamped and counted.
double focal_term(double p, double alpha, double gamma, long* clamp_count = nullptr);

// Mean negative log-likelihood of the true category over rows of `probs`
// ([P, n], rows sum to 1); with use_focal_cls each term is a focal term.
double cls_loss(const Tensor<double>& probs, const std::vector<int>& labels, const LossConfig& cfg);

struct CoordLoss {
  double value = 0;
  bool no_positives = false;
};
// Mean over rows of sum_{x,y,w,h} (pred - target)^2.
CoordLoss coord_loss(const Tensor<double>& pred, const Tensor<double>& target);

// Mean squared confidence over negative anchors; ignored anchors excluded.
double noobj_loss(const std::vector<double>& confidences, const std::vector<AnchorRole>& roles);

// Mean squared error of positive confidences against their targets.
double objectness_loss(const std::vector<double>& confidences, const std::vector<AnchorRole>& roles,
                       const std::vector<double>& targets);

// total = cls + lambda_coord * coord + lambda_noobj * noobj. Non-finite parts
// raise NumericError naming the component.
LossBreakdown total_loss(double cls, double coord, double noobj, const LossConfig& cfg);

// --- differentiable versions -------------------------------------------------

// logits [P, n]; softmax then per-row focal / cross-entropy, averaged.
template <typename Scalar>
Var cls_loss(Tape<Scalar>& tape, Var logits, const std::vector<int>& labels, const LossConfig& cfg);

template <typename Scalar>
Var coord_loss(Tape<Scalar>& tape, Var pred, const Tensor<Scalar>& target);

// objectness logits [A, 1]. Negative anchors contribute sigmoid^2 averaged
// over negatives; positives contribute (sigmoid - target)^2 averaged over
// positives unless the target mode is kNone.
template <typename Scalar>
Var confidence_loss(Tape<Scalar>& tape, Var objectness, const std::vector<AnchorRole>& roles,
                    const std::vector<Scalar>& positive_targets, const LossConfig& cfg);

template <typename Scalar>
Var total_loss(Tape<Scalar>& tape, Var cls, Var coord, Var noobj, const LossConfig& cfg);

}  // namespace adahead

#endif  // ADAHEAD_LOSSES_HPP_
