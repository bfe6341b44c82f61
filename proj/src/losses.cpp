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

#include "adahead/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adahead/ops.hpp"
#include "adahead/scalar.hpp"

namespace adahead {

void LossConfig::validate(int num_categories) const {
  if (!(lambda_coord > 0) || !(lambda_noobj > 0)) {
    throw ConfigError("loss weights lambda_coord and lambda_noobj must be positive");
  }
  if (!(gamma >= 0)) throw ConfigError("focal gamma must be >= 0");
  if (!alpha.empty() && static_cast<int>(alpha.size()) != num_categories) {
    throw ConfigError("alpha has " + std::to_string(alpha.size()) + " entries for " +
                      std::to_string(num_categories) + " categories");
  }
}

std::vector<double> class_weights(const std::vector<double>& w) {
  if (w.empty()) throw ValidationError("class_weights: empty weight vector");
  double sum = 0;
  for (double v : w) {
    if (!(v > 0)) throw ValidationError("class_weights: every weight must be positive (smooth zero counts)");
    sum += v;
  }
  std::vector<double> alpha;
  alpha.reserve(w.size());
  for (double v : w) alpha.push_back(sum / v);
  return alpha;
}

double focal_term(double p, double alpha, double gamma, long* clamp_count) {
  if (p < kProbabilityFloor) {
    p = kProbabilityFloor;
    if (clamp_count) ++*clamp_count;
  }
  if (p >= 1.0) return 0.0;
  return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
}

namespace {

double alpha_of(const LossConfig& cfg, int label) {
  return cfg.alpha.empty() ? 1.0 : cfg.alpha[static_cast<std::size_t>(label)];
}

void check_label(int label, Index n) {
  if (label < 0 || label >= n) {
    throw ValidationError("category label " + std::to_string(label) + " out of range [0," +
                          std::to_string(n) + ")");
  }
}

}  // namespace

double cls_loss(const Tensor<double>& probs, const std::vector<int>& labels, const LossConfig& cfg) {
  if (labels.empty()) return 0.0;
  const Index n = probs.shape().back();
  const Index rows = probs.size() / n;
  if (rows != static_cast<Index>(labels.size())) throw DimensionError("cls_loss: rows/labels mismatch");
  double sum = 0;
  for (Index r = 0; r < rows; ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    check_label(y, n);
    const double p = std::max(probs[r * n + y], kProbabilityFloor);
    sum += cfg.use_focal_cls ? focal_term(p, alpha_of(cfg, y), cfg.gamma) : -std::log(p);
  }
  return sum / static_cast<double>(rows);
}

CoordLoss coord_loss(const Tensor<double>& pred, const Tensor<double>& target) {
  if (pred.shape() != target.shape()) throw DimensionError("coord_loss: shape mismatch");
  const Index rows = pred.size() / 4;
  CoordLoss out;
  if (rows == 0) {
    out.no_positives = true;
    return out;
  }
  double sum = 0;
  for (Index i = 0; i < pred.size(); ++i) sum += (pred[i] - target[i]) * (pred[i] - target[i]);
  out.value = sum / static_cast<double>(rows);
  return out;
}

double noobj_loss(const std::vector<double>& confidences, const std::vector<AnchorRole>& roles) {
  if (confidences.size() != roles.size()) throw DimensionError("noobj_loss: length mismatch");
  double sum = 0;
  long n = 0;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] != AnchorRole::kNegative) continue;
    sum += confidences[i] * confidences[i];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double objectness_loss(const std::vector<double>& confidences, const std::vector<AnchorRole>& roles,
                       const std::vector<double>& targets) {
  if (confidences.size() != roles.size() || targets.size() != roles.size()) {
    throw DimensionError("objectness_loss: length mismatch");
  }
  double sum = 0;
  long n = 0;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] != AnchorRole::kPositive) continue;
    const double d = confidences[i] - targets[i];
    sum += d * d;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

LossBreakdown total_loss(double cls, double coord, double noobj, const LossConfig& cfg) {
  if (!std::isfinite(cls)) throw NumericError("non-finite loss component", "cls");
  if (!std::isfinite(coord)) throw NumericError("non-finite loss component", "coord");
  if (!std::isfinite(noobj)) throw NumericError("non-finite loss component", "noobj");
  LossBreakdown b{cls, coord, noobj, 0.0};
  b.total = cls + cfg.lambda_coord * coord + cfg.lambda_noobj * noobj;
  return b;
}

template <typename Scalar>
Var cls_loss(Tape<Scalar>& tape, Var logits, const std::vector<int>& labels, const LossConfig& cfg) {
  if (labels.empty()) return tape.constant(Tensor<Scalar>::scalar(0));
  const Tensor<Scalar>& z = tape.value(logits);
  const Index n = z.shape().back();
  const Index rows = z.size() / n;
  if (rows != static_cast<Index>(labels.size())) throw DimensionError("cls_loss: rows/labels mismatch");
  for (int y : labels) check_label(y, n);

  // Softmax rows and per-row dLoss/dp_y.
  Tensor<Scalar> probs({rows, n});
  std::vector<Scalar> dterm(static_cast<std::size_t>(rows));
  Scalar sum = 0;
  for (Index r = 0; r < rows; ++r) {
    const Scalar* zr = z.data() + r * n;
    Scalar* pr = probs.data() + r * n;
    const Scalar mx = *std::max_element(zr, zr + n);
    Scalar denom = 0;
    for (Index j = 0; j < n; ++j) denom += (pr[j] = std::exp(zr[j] - mx));
    for (Index j = 0; j < n; ++j) pr[j] /= denom;
    const int y = labels[static_cast<std::size_t>(r)];
    const Scalar raw = pr[y];
    const bool clamped = raw < Scalar(kProbabilityFloor);
    const Scalar p = clamped ? Scalar(kProbabilityFloor) : raw;
    const Scalar a = static_cast<Scalar>(alpha_of(cfg, y));
    const Scalar g = static_cast<Scalar>(cfg.gamma);
    Scalar term, d;
    if (cfg.use_focal_cls) {
      const Scalar q = Scalar(1) - p;
      term = q > 0 ? -a * std::pow(q, g) * std::log(p) : Scalar(0);
      const Scalar dpow = (q > 0 && g > 0) ? g * std::pow(q, g - Scalar(1)) : Scalar(0);
      d = a * (dpow * std::log(p) - (q > 0 ? std::pow(q, g) : Scalar(0)) / p);
    } else {
      term = -std::log(p);
      d = -Scalar(1) / p;
    }
    sum += term;
    dterm[static_cast<std::size_t>(r)] = clamped ? Scalar(0) : d;
  }
  const Scalar inv_rows = Scalar(1) / static_cast<Scalar>(rows);
  return tape.record("cls_loss", Tensor<Scalar>::scalar(sum * inv_rows), {logits},
                     [logits, labels, probs = std::move(probs), dterm = std::move(dterm), rows, n,
                      inv_rows](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(logits)) return;
                       Tensor<Scalar>& dz = t.grad_buffer(logits);
                       for (Index r = 0; r < rows; ++r) {
                         const int y = labels[static_cast<std::size_t>(r)];
                         const Scalar* pr = probs.data() + r * n;
                         const Scalar s = dy[0] * inv_rows * dterm[static_cast<std::size_t>(r)] * pr[y];
                         for (Index j = 0; j < n; ++j) dz[r * n + j] += s * ((j == y ? Scalar(1) : Scalar(0)) - pr[j]);
                       }
                     });
}

template <typename Scalar>
Var coord_loss(Tape<Scalar>& tape, Var pred, const Tensor<Scalar>& target) {
  const Tensor<Scalar>& p = tape.value(pred);
  if (p.shape() != target.shape()) {
    throw DimensionError("coord_loss: pred " + shape_string(p.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  const Index rows = p.size() / 4;
  Scalar sum = 0;
  for (Index i = 0; i < p.size(); ++i) sum += (p[i] - target[i]) * (p[i] - target[i]);
  const Scalar inv_rows = Scalar(1) / static_cast<Scalar>(rows);
  return tape.record("coord_loss", Tensor<Scalar>::scalar(sum * inv_rows), {pred},
                     [pred, target, inv_rows](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(pred)) return;
                       const Tensor<Scalar>& p = t.value(pred);
                       Tensor<Scalar>& dp = t.grad_buffer(pred);
                       for (Index i = 0; i < p.size(); ++i)
                         dp[i] += dy[0] * Scalar(2) * (p[i] - target[i]) * inv_rows;
                     });
}

template <typename Scalar>
Var confidence_loss(Tape<Scalar>& tape, Var objectness, const std::vector<AnchorRole>& roles,
                    const std::vector<Scalar>& positive_targets, const LossConfig& cfg) {
  const Tensor<Scalar>& o = tape.value(objectness);
  if (o.size() != static_cast<Index>(roles.size())) {
    throw DimensionError("confidence_loss: " + std::to_string(o.size()) + " logits for " +
                         std::to_string(roles.size()) + " anchors");
  }
  const bool use_pos = cfg.objectness_target != ObjectnessTarget::kNone;
  if (use_pos && positive_targets.size() != roles.size()) {
    throw DimensionError("confidence_loss: positive target length mismatch");
  }
  Index n_neg = 0, n_pos = 0;
  for (AnchorRole r : roles) {
    n_neg += r == AnchorRole::kNegative;
    n_pos += r == AnchorRole::kPositive;
  }
  const Scalar w_neg = n_neg ? Scalar(1) / static_cast<Scalar>(n_neg) : Scalar(0);
  const Scalar w_pos = (use_pos && n_pos) ? Scalar(1) / static_cast<Scalar>(n_pos) : Scalar(0);
  Scalar neg_sum = 0, pos_sum = 0;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const Scalar s = logistic(o[static_cast<Index>(i)]);
    if (roles[i] == AnchorRole::kNegative) {
      neg_sum += s * s;
    } else if (roles[i] == AnchorRole::kPositive && use_pos) {
      const Scalar d = s - positive_targets[i];
      pos_sum += d * d;
    }
  }
  const Scalar value = neg_sum * w_neg + pos_sum * w_pos;
  std::vector<Scalar> targets = use_pos ? positive_targets : std::vector<Scalar>();
  return tape.record("confidence_loss", Tensor<Scalar>::scalar(value), {objectness},
                     [objectness, roles, targets = std::move(targets), w_neg, w_pos](
                         Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(objectness)) return;
                       const Tensor<Scalar>& o = t.value(objectness);
                       Tensor<Scalar>& d = t.grad_buffer(objectness);
                       for (std::size_t i = 0; i < roles.size(); ++i) {
                         const Scalar s = logistic(o[static_cast<Index>(i)]);
                         const Scalar ds = s * (Scalar(1) - s);
                         if (roles[i] == AnchorRole::kNegative) {
                           d[static_cast<Index>(i)] += dy[0] * w_neg * Scalar(2) * s * ds;
                         } else if (roles[i] == AnchorRole::kPositive && w_pos > 0) {
                           d[static_cast<Index>(i)] += dy[0] * w_pos * Scalar(2) * (s - targets[i]) * ds;
                         }
                       }
                     });
}

template <typename Scalar>
Var total_loss(Tape<Scalar>& tape, Var cls, Var coord, Var noobj, const LossConfig& cfg) {
  const char* names[] = {"cls", "coord", "noobj"};
  const Var parts[] = {cls, coord, noobj};
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(static_cast<double>(tape.value(parts[i]).item()))) {
      throw NumericError("non-finite loss component", names[i]);
    }
  }
  return weighted_sum(tape, {cls, coord, noobj},
                      {Scalar(1), static_cast<Scalar>(cfg.lambda_coord), static_cast<Scalar>(cfg.lambda_noobj)});
}

#define ADAHEAD_INSTANTIATE_LOSSES(S)                                                               \
  template Var cls_loss(Tape<S>&, Var, const std::vector<int>&, const LossConfig&);               \
  template Var coord_loss(Tape<S>&, Var, const Tensor<S>&);                                       \
  template Var confidence_loss(Tape<S>&, Var, const std::vector<AnchorRole>&, const std::vector<S>&, \
                               const LossConfig&);                                                \
  template Var total_loss(Tape<S>&, Var, Var, Var, const LossConfig&);

ADAHEAD_INSTANTIATE_LOSSES(float)
ADAHEAD_INSTANTIATE_LOSSES(double)

}  // namespace adahead
