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

#include "adahead/gradcheck_suite.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "adahead/attention.hpp"
#include "adahead/losses.hpp"
#include "adahead/model.hpp"
#include "adahead/rng.hpp"

namespace adahead {

namespace {

Tensor<double> random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor<double> t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Moves entries within `margin` of any kink point out to margin distance, so
// central differences never straddle a kink.
Tensor<double> away_from(Tensor<double> t, const std::vector<double>& kinks, double margin) {
  for (Index i = 0; i < t.size(); ++i) {
    for (double k : kinks) {
      const double d = t[i] - k;
      if (std::abs(d) < margin) t[i] = k + (d < 0 ? -margin : margin);
    }
  }
  return t;
}

// Small DVF parameter set on C channels, kept clear of every kink.
struct DvfFixture {
  Index levels = 3, h = 4, w = 4, c = 8, hidden = 4;
  int k = 9;
  std::vector<Tensor<double>> tensors() const {
    Tensor<double> ob = random_tensor({4 * k}, 31, -0.3, 0.3);
    for (Index i = 0; i < 2 * k; ++i) ob[i] += 0.37;  // fractional sample positions
    return {
        random_tensor({levels, h, w, c}, 11),             // F
        Tensor<double>({1, 1, 1, 1}, {0.7}),              // scale w
        Tensor<double>({1}, {0.2}),                       // scale b
        random_tensor({3, 3, c, 4 * k}, 21, -0.01, 0.01), // offset w
        ob,                                               // offset b
        random_tensor({c, hidden}, 41, -0.5, 0.5),        // theta w1
        random_tensor({hidden}, 42, -0.2, 0.2),           // theta b1
        random_tensor({hidden, 4 * c}, 43, -0.5, 0.5),    // theta w2
        random_tensor({4 * c}, 44, -0.5, 0.5),            // theta b2
    };
  }
  static DvfVars vars(const std::vector<Var>& in) {
    DvfVars v;
    v.scale_w = in[1];
    v.scale_b = in[2];
    v.offset_w = in[3];
    v.offset_b = in[4];
    v.theta_w1 = in[5];
    v.theta_b1 = in[6];
    v.theta_w2 = in[7];
    v.theta_b2 = in[8];
    v.sampling_points = 9;
    return v;
  }
};

std::vector<Tensor<double>> jgr_tensors(Index c, Index b, Index n, std::uint64_t seed) {
  std::vector<Tensor<double>> t;
  for (Index out : {b * (n + 1), b * 4}) {
    for (Index k : {1, 3, 5}) {
      t.push_back(random_tensor({k, k, c, c}, seed++, -0.3, 0.3));
      t.push_back(random_tensor({c}, seed++, -0.1, 0.1));
    }
    t.push_back(random_tensor({1, 1, c, out}, seed++, -0.5, 0.5));
    t.push_back(random_tensor({out}, seed++, -0.1, 0.1));
  }
  return t;
}

JgrVars jgr_vars(const std::vector<Var>& in, std::size_t first, int b, int n) {
  JgrVars v;
  auto ms = [&](std::size_t o) {
    return MultiScaleVars{in[o], in[o + 1], in[o + 2], in[o + 3], in[o + 4], in[o + 5]};
  };
  v.cls_ms = ms(first);
  v.cls_w = in[first + 6];
  v.cls_b = in[first + 7];
  v.box_ms = ms(first + 8);
  v.box_w = in[first + 14];
  v.box_b = in[first + 15];
  v.anchors_per_cell = b;
  v.num_categories = n;
  return v;
}

// All head outputs flattened into one column.
Var flatten_head(Tape<double>& tape, const HeadOutput<double>& h) {
  std::vector<Var> cols;
  for (Var v : {h.class_logits, h.objectness, h.box_params}) {
    cols.push_back(reshape(tape, v, Shape{tape.value(v).size(), 1}));
  }
  return concat_rows(tape, cols);
}

void add_ops_cases(std::vector<GradCase>& out) {
  auto push = [&](std::string name, GradGraph g, std::vector<Tensor<double>> in) {
    out.push_back({std::move(name), "ops", std::move(g), std::move(in)});
  };
  push("conv2d",
      [](Tape<double>& t, const std::vector<Var>& v) { return conv2d(t, v[0], v[1], v[2], Conv2dOptions::same(3)); },
      {random_tensor({2, 5, 5, 3}, 1), random_tensor({3, 3, 3, 4}, 2), random_tensor({4}, 3)});
  push("conv2d_stride2",
      [](Tape<double>& t, const std::vector<Var>& v) {
        return conv2d(t, v[0], v[1], v[2], Conv2dOptions::same(3, 2));
      },
      {random_tensor({1, 7, 6, 2}, 4), random_tensor({3, 3, 2, 3}, 5), random_tensor({3}, 6)});
  push("conv2d_1x1",
      [](Tape<double>& t, const std::vector<Var>& v) { return conv2d(t, v[0], v[1], v[2], Conv2dOptions{}); },
      {random_tensor({1, 3, 4, 5}, 7), random_tensor({1, 1, 5, 2}, 8), random_tensor({2}, 9)});
  push("affine", [](Tape<double>& t, const std::vector<Var>& v) { return affine(t, v[0], v[1], v[2]); },
      {random_tensor({4, 6}, 10), random_tensor({6, 3}, 11), random_tensor({3}, 12)});
  push("reduce_mean",
      [](Tape<double>& t, const std::vector<Var>& v) { return reduce_mean(t, v[0], {0, 2}, true); },
      {random_tensor({3, 4, 5}, 13)});
  push("hard_sigmoid", [](Tape<double>& t, const std::vector<Var>& v) { return hard_sigmoid(t, v[0]); },
      {away_from(random_tensor({5, 6}, 14, -2.0, 2.0), {-1.0, 1.0}, 0.05)});
  push("shifted_sigmoid", [](Tape<double>& t, const std::vector<Var>& v) { return shifted_sigmoid(t, v[0]); },
      {random_tensor({5, 6}, 15, -3.0, 3.0)});
  push("sigmoid", [](Tape<double>& t, const std::vector<Var>& v) { return sigmoid(t, v[0]); },
      {random_tensor({5, 6}, 16, -3.0, 3.0)});
  push("leaky_relu", [](Tape<double>& t, const std::vector<Var>& v) { return leaky_relu(t, v[0], 0.1); },
      {away_from(random_tensor({5, 6}, 17), {0.0}, 0.05)});
  push("add_sub_mul",
      [](Tape<double>& t, const std::vector<Var>& v) {
        return mul(t, add(t, v[0], v[1]), sub(t, v[0], scale(t, v[1], 0.5)));
      },
      {random_tensor({3, 4}, 18), random_tensor({3, 4}, 19)});
  push("mul_broadcast",
      [](Tape<double>& t, const std::vector<Var>& v) { return mul_broadcast(t, v[0], v[1]); },
      {random_tensor({3, 2, 2, 4}, 20), random_tensor({3, 1, 1, 1}, 21)});
  push("reshape_slice_select",
      [](Tape<double>& t, const std::vector<Var>& v) {
        Var s = slice_last(t, v[0], 1, 4);
        return select(t, reshape(t, s, Shape{2, 3, 3}), 1);
      },
      {random_tensor({6, 5}, 22)});
  push("stack_concat_gather",
      [](Tape<double>& t, const std::vector<Var>& v) {
        Var s = stack(t, {v[0], v[1]});
        Var c = concat_rows(t, {reshape(t, s, Shape{8, 3}), v[1]});
        return gather_rows(t, c, {0, 5, 9, 9, 2});
      },
      {random_tensor({4, 3}, 23), random_tensor({4, 3}, 24)});
  push("resize_bilinear_up",
      [](Tape<double>& t, const std::vector<Var>& v) { return resize_bilinear(t, v[0], 7, 5); },
      {random_tensor({3, 2, 2}, 25)});
  push("resize_bilinear_down",
      [](Tape<double>& t, const std::vector<Var>& v) { return resize_bilinear(t, v[0], 2, 3); },
      {random_tensor({5, 7, 2}, 26)});
  push("standardize", [](Tape<double>& t, const std::vector<Var>& v) { return standardize(t, v[0], 1e-5); },
      {random_tensor({1, 6}, 27)});
  {
    // Offsets with fractional parts well inside (0, 1) so no sample crosses
    // an integer position under perturbation.
    Tensor<double> off = random_tensor({3, 3, 4, 2}, 28, -1.5, 1.5);
    for (Index i = 0; i < off.size(); ++i) {
      const double f = off[i] - std::floor(off[i]);
      if (f < 0.05) off[i] += 0.05;
      if (f > 0.95) off[i] -= 0.05;
    }
    push("deform_aggregate",
        [](Tape<double>& t, const std::vector<Var>& v) { return deform_aggregate(t, v[0], v[1], v[2], v[3]); },
        {random_tensor({2, 3, 3, 2}, 29), off, random_tensor({3, 3, 4}, 30, 0.1, 0.9),
         random_tensor({3, 3, 4}, 31)});
  }
  {
    // x values kept where the two branches are clearly apart.
    Tensor<double> theta({2, 4}, {1.0, -0.5, 0.1, -0.2, 0.7, 0.2, 0.0, 0.3});
    Tensor<double> x = random_tensor({3, 2}, 32, -2.0, 2.0);
    // Branch crossings at x = (b2 - b1) / (a1 - a2) per channel.
    for (Index i = 0; i < x.size(); ++i) {
      const Index c = i % 2;
      const double cross = (theta[c * 4 + 3] - theta[c * 4 + 2]) / (theta[c * 4] - theta[c * 4 + 1]);
      if (std::abs(x[i] - cross) < 0.1) x[i] = cross + 0.1;
    }
    push("dynamic_relu", [](Tape<double>& t, const std::vector<Var>& v) { return dynamic_relu(t, v[0], v[1]); },
        {x, theta});
  }
  push("weighted_sum_sum_all",
      [](Tape<double>& t, const std::vector<Var>& v) {
        return weighted_sum(t, {sum_all(t, v[0]), sum_all(t, v[1], 0.5)}, {2.0, -3.0});
      },
      {random_tensor({3, 2}, 33), random_tensor({2, 2}, 34)});
}

void add_head_cases(std::vector<GradCase>& out) {
  auto push = [&](std::string name, GradGraph g, std::vector<Tensor<double>> in) {
    out.push_back({std::move(name), "head", std::move(g), std::move(in)});
  };
  const DvfFixture fx;
  const std::vector<Tensor<double>> dvf = fx.tensors();

  push("make_pyramid",
      [](Tape<double>& t, const std::vector<Var>& v) { return make_pyramid(t, {v[0], v[1], v[2]}).common; },
      {random_tensor({8, 8, 3}, 50), random_tensor({4, 4, 3}, 51), random_tensor({2, 2, 3}, 52)});
  push("scale_attention",
      [](Tape<double>& t, const std::vector<Var>& v) { return scale_attention(t, v[0], v[1], v[2]); },
      {dvf[0], dvf[1], dvf[2]});
  push("spatial_attention",
      [](Tape<double>& t, const std::vector<Var>& v) {
        const SamplingField f = predict_sampling(t, v[0], 1, v[1], v[2], 9);
        return spatial_attention(t, v[0], f);
      },
      {dvf[0], dvf[3], dvf[4]});
  push("task_params",
      [](Tape<double>& t, const std::vector<Var>& v) { return task_params(t, v[0], v[1], v[2], v[3], v[4]); },
      {dvf[0], dvf[5], dvf[6], dvf[7], dvf[8]});
  {
    Tensor<double> theta = random_tensor({8, 4}, 53, -0.9, 0.9);
    for (Index c = 0; c < 8; ++c) {
      theta[c * 4] = 0.9;   // a1
      theta[c * 4 + 1] = 0.1;  // a2, crossings at x = (b2 - b1) / 0.8
    }
    Tensor<double> x = dvf[0];
    for (Index i = 0; i < x.size(); ++i) {
      const Index c = i % 8;
      const double cross = (theta[c * 4 + 3] - theta[c * 4 + 2]) / 0.8;
      if (std::abs(x[i] - cross) < 0.05) x[i] = cross + 0.05;
    }
    push("task_attention",
        [](Tape<double>& t, const std::vector<Var>& v) { return task_attention(t, v[0], v[1]); }, {x, theta});
  }
  push("dvf_apply",
      [](Tape<double>& t, const std::vector<Var>& v) { return dvf_apply(t, v[0], 1, DvfFixture::vars(v)); }, dvf);
  {
    std::vector<Tensor<double>> in{random_tensor({1, 4, 4, 6}, 54)};
    for (Index k : {1, 3, 5}) {
      in.push_back(random_tensor({k, k, 6, 6}, 55 + static_cast<std::uint64_t>(k), -0.3, 0.3));
      in.push_back(random_tensor({6}, 60 + static_cast<std::uint64_t>(k), -0.1, 0.1));
    }
    push("multiscale_conv",
        [](Tape<double>& t, const std::vector<Var>& v) {
          return multiscale_conv(t, v[0], MultiScaleVars{v[1], v[2], v[3], v[4], v[5], v[6]});
        },
        in);
  }
  push("backbone_block",
      [](Tape<double>& t, const std::vector<Var>& v) {
        return leaky_relu(t, conv2d(t, v[0], v[1], v[2], Conv2dOptions::same(3, 2)), 0.1);
      },
      {random_tensor({1, 6, 6, 3}, 64), random_tensor({3, 3, 3, 4}, 65), random_tensor({4}, 66)});
  {
    BackboneConfig bc;
    bc.stem = 3;
    bc.widths = {4, 4};
    bc.strides = {2, 4};
    bc.channels = 4;
    std::vector<Tensor<double>> in{random_tensor({1, 8, 8, 3}, 67)};
    std::vector<std::string> names;
    for (const ParamSpec& p : backbone_params(bc)) {
      in.push_back(random_tensor(p.shape, 68 + in.size(), -0.5, 0.5));
      names.push_back(p.name);
    }
    push("backbone_forward",
        [bc, names](Tape<double>& t, const std::vector<Var>& v) {
          BackboneVars bv;
          bv.stem_k = v[1];
          bv.stem_b = v[2];
          std::size_t i = 3;
          for (std::size_t s = 0; s < bc.widths.size(); ++s, i += 2) {
            bv.stage_k.push_back(v[i]);
            bv.stage_b.push_back(v[i + 1]);
          }
          for (std::size_t l = 0; l < bc.strides.size(); ++l, i += 2) {
            bv.proj_k.push_back(v[i]);
            bv.proj_b.push_back(v[i + 1]);
          }
          std::vector<Var> cols;
          for (Var lvl : backbone_forward(t, v[0], bc, bv)) {
            cols.push_back(reshape(t, lvl, Shape{t.value(lvl).size(), 1}));
          }
          return concat_rows(t, cols);
        },
        in);
  }
  {
    std::vector<Tensor<double>> in{random_tensor({1, 3, 3, 6}, 70)};
    for (auto& t : jgr_tensors(6, 2, 3, 71)) in.push_back(std::move(t));
    push("jgr_forward",
        [](Tape<double>& t, const std::vector<Var>& v) {
          return flatten_head(t, jgr_forward(t, v[0], jgr_vars(v, 1, 2, 3)));
        },
        in);
  }
}

// Tiny end-to-end model used for the loss-through-head case.
ModelConfig micro_model() {
  ModelConfig m;
  m.input_size = 32;
  m.num_categories = 3;
  m.backbone.stem = 4;
  m.backbone.widths = {4, 6, 8, 8, 8};
  m.backbone.strides = {8, 16, 32};
  m.backbone.channels = 8;
  m.theta_reduction = 2;
  m.sampling_points = 9;
  m.anchor_scales = {1.5, 2.5};
  m.anchor_ratios = {1};
  return m;
}

void add_loss_cases(std::vector<GradCase>& out) {
  auto push = [&](std::string name, GradGraph g, std::vector<Tensor<double>> in) {
    out.push_back({std::move(name), "loss", std::move(g), std::move(in)});
  };
  LossConfig focal;
  focal.alpha = {1.5, 4.0, 6.0};
  focal.gamma = 2.0;
  push("cls_loss_focal",
      [focal](Tape<double>& t, const std::vector<Var>& v) { return cls_loss(t, v[0], {0, 2, 1, 0, 2}, focal); },
      {random_tensor({5, 3}, 80, -2.0, 2.0)});
  LossConfig ce = focal;
  ce.use_focal_cls = false;
  push("cls_loss_ce",
      [ce](Tape<double>& t, const std::vector<Var>& v) { return cls_loss(t, v[0], {1, 1, 0}, ce); },
      {random_tensor({3, 3}, 81, -2.0, 2.0)});
  const Tensor<double> target = random_tensor({4, 4}, 82, -1.0, 1.0);
  push("coord_loss",
      [target](Tape<double>& t, const std::vector<Var>& v) { return coord_loss(t, v[0], target); },
      {random_tensor({4, 4}, 83)});
  {
    std::vector<AnchorRole> roles{AnchorRole::kNegative, AnchorRole::kPositive, AnchorRole::kIgnored,
                                  AnchorRole::kNegative, AnchorRole::kPositive, AnchorRole::kNegative};
    std::vector<double> tgt{0, 0.8, 0, 0, 0.35, 0};
    push("confidence_loss",
        [roles, tgt, focal](Tape<double>& t, const std::vector<Var>& v) {
          return confidence_loss(t, v[0], roles, tgt, focal);
        },
        {random_tensor({6, 1}, 84, -3.0, 3.0)});
  }
  push("total_loss",
      [focal](Tape<double>& t, const std::vector<Var>& v) { return total_loss(t, v[0], v[1], v[2], focal); },
      {Tensor<double>::scalar(0.7), Tensor<double>::scalar(1.3), Tensor<double>::scalar(0.2)});

  // Full objective through backbone, DVF and JGRM on a 2-image micro-batch.
  const ModelConfig cfg = micro_model();
  Params<double> params = init_params<double>(cfg, 5);
  // Break the symmetric starting point: random weights everywhere, and
  // fractional sampling offsets so no sample sits on a bilinear kink.
  Rng rng(91);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    Tensor<double>& t = params.tensors[i];
    for (Index j = 0; j < t.size(); ++j) t[j] += rng.uniform(-0.05, 0.05);
  }
  // Zero-started output layers would leave the branch gradients near the
  // finite-difference noise floor.
  for (const char* name : {"head.cls.w", "head.box.w"}) {
    Tensor<double>& t = params.tensors[params.index_of(name)];
    for (Index j = 0; j < t.size(); ++j) t[j] = rng.uniform(-0.4, 0.4);
  }
  Tensor<double>& ob = params.tensors[params.index_of("dvf.offset.b")];
  for (Index j = 0; j < 2 * cfg.sampling_points; ++j) ob[j] += 0.31;
  // Heavier per-point weights lift the offset-predictor gradients clear of
  // rounding noise in the objective.
  for (Index j = 3 * cfg.sampling_points; j < 4 * cfg.sampling_points; ++j) ob[j] = 2.0;

  SceneConfig sc;
  sc.height = sc.width = cfg.input_size;
  sc.radii = {{4, 6}, {3, 4}, {2, 3}};
  sc.min_objects = 2;
  sc.max_objects = 3;
  auto images = std::make_shared<std::vector<Tensor<double>>>();
  auto targets = std::make_shared<std::vector<TargetSet>>();
  auto fixed = std::make_shared<std::vector<std::vector<double>>>();
  const AnchorSet anchors = cfg.anchors();
  // A small objective keeps its rounding noise well under the smallest
  // gradients: uniform class weights, unit coordinate weight and hand-placed
  // boxes near cell centers and anchor sizes.
  LossConfig lc = focal;
  lc.alpha = {0.25, 0.25, 0.25};
  lc.lambda_coord = 1.0;
  const std::vector<std::vector<GroundTruth>> labels{
      {{0, {0.36, 0.40, 0.40, 0.35}}, {2, {0.66, 0.85, 0.35, 0.40}}},
      {{1, {0.14, 0.62, 0.40, 0.40}}, {0, {0.60, 0.37, 0.60, 0.65}}}};
  for (std::uint64_t i = 0; i < 2; ++i) {
    const LabeledImage scene = generate_scene(sc, i);
    images->push_back(image_input<double>(scene.pixels));
    targets->push_back(build_targets(labels[i], anchors));
    Tape<double> tape;
    tape.set_grad_enabled(false);
    const ModelVars mv = bind_params(tape, params, cfg, false);
    const ForwardResult<double> fwd = model_forward(tape, tape.constant(images->back()), cfg, mv);
    fixed->push_back(objectness_targets(tape.value(fwd.box_params), targets->back(), anchors));
  }
  // Backbone weights enter as constants; the head parameters are checked.
  const std::vector<std::string> names = params.names;
  auto frozen = std::make_shared<std::vector<Tensor<double>>>();
  std::vector<Tensor<double>> head;
  for (std::size_t i = 0; i < names.size(); ++i) {
    (names[i].rfind("backbone.", 0) == 0 ? *frozen : head).push_back(params.tensors[i]);
  }
  push("total_loss_through_head",
      [=](Tape<double>& t, const std::vector<Var>& v) {
        std::vector<Var> all;
        for (const Tensor<double>& f : *frozen) all.push_back(t.constant(f));
        all.insert(all.end(), v.begin(), v.end());
        const ModelVars mv = assemble_vars(names, all, cfg);
        std::vector<Var> totals;
        for (std::size_t i = 0; i < images->size(); ++i) {
          const ForwardResult<double> fwd = model_forward(t, t.constant((*images)[i]), cfg, mv);
          totals.push_back(image_loss(t, fwd, (*targets)[i], anchors, lc, &(*fixed)[i]).total);
        }
        return weighted_sum(t, totals, std::vector<double>(totals.size(), 0.5));
      },
      head);
}

}  // namespace

std::vector<GradCase> gradcheck_cases(const std::string& scope) {
  if (scope != "ops" && scope != "head" && scope != "loss" && scope != "all") {
    throw ConfigError("gradcheck scope must be ops, head, loss or all; got '" + scope + "'");
  }
  std::vector<GradCase> out;
  if (scope == "ops" || scope == "all") add_ops_cases(out);
  if (scope == "head" || scope == "all") add_head_cases(out);
  if (scope == "loss" || scope == "all") add_loss_cases(out);
  return out;
}

GradCase corrupted_gradient_case() {
  GradCase c;
  c.name = "corrupted_scale";
  c.scope = "ops";
  c.graph = [](Tape<double>& t, const std::vector<Var>& v) {
    Tensor<double> y = t.value(v[0]);
    for (Index i = 0; i < y.size(); ++i) y[i] *= 2.0;
    const Var x = v[0];
    return t.record("corrupted_scale", std::move(y), {x}, [x](Tape<double>& tp, const Tensor<double>& dy) {
      Tensor<double>& g = tp.grad_buffer(x);
      for (Index i = 0; i < g.size(); ++i) g[i] += 2.2 * dy[i];
    });
  };
  c.inputs = {random_tensor({3, 3}, 99)};
  return c;
}

GradCaseResult run_case(const GradCase& c, double tolerance) {
  GradCaseResult r;
  r.name = c.name;
  r.scope = c.scope;
  r.check = grad_check(c.graph, c.inputs);
  r.passed = r.check.max_rel_error <= tolerance;
  return r;
}

void print_result(std::ostream& os, const GradCaseResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %-5s %-26s max_rel_err %.3e  coords %lld%s\n", r.passed ? "PASS" : "FAIL",
                r.scope.c_str(), r.name.c_str(), r.check.max_rel_error,
                static_cast<long long>(r.check.coords_checked), r.passed ? "" : "  <- gradient mismatch");
  os << buf;
  if (!r.passed) {
    std::snprintf(buf, sizeof buf, "     worst input %d coord %lld: analytic %.9g numeric %.9g\n",
                  r.check.worst_input, static_cast<long long>(r.check.worst_coord), r.check.analytic,
                  r.check.numeric);
    os << buf;
  }
}

std::vector<GradCaseResult> run_gradcheck(const std::string& scope, std::ostream* log, double tolerance) {
  std::vector<GradCaseResult> out;
  for (const GradCase& c : gradcheck_cases(scope)) {
    out.push_back(run_case(c, tolerance));
    if (log) print_result(*log, out.back());
  }
  return out;
}

}  // namespace adahead
