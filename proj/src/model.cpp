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

#include "adahead/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adahead/rng.hpp"

namespace adahead {

void ModelConfig::validate() const {
  if (input_size < 1) throw ConfigError("input_size must be positive");
  if (num_categories < 1) throw ConfigError("categories must be positive");
  backbone.validate();
  if (theta_reduction < 1 || backbone.channels % theta_reduction != 0) {
    throw ConfigError("theta_reduction must divide the head channel count");
  }
  if (anchor_scales.empty() || anchor_ratios.empty()) throw ConfigError("anchors need scales and ratios");
  for (double s : anchor_scales)
    if (!(s > 0)) throw ConfigError("anchor scales must be positive");
  for (double r : anchor_ratios)
    if (!(r > 0)) throw ConfigError("anchor ratios must be positive");
}

AnchorSet ModelConfig::anchors() const {
  return dynamic_anchors(input_size, input_size, backbone.strides, anchor_scales, anchor_ratios);
}

ModelConfig ModelConfig::from_keys(const KeyValues& kv) {
  ModelConfig m;
  m.input_size = kv.get_int("input_size", m.input_size);
  m.num_categories = static_cast<int>(kv.get_int("categories", m.num_categories));
  m.backbone.stem = static_cast<int>(kv.get_int("stem", m.backbone.stem));
  m.backbone.widths = kv.get_ints("widths", m.backbone.widths);
  m.backbone.strides = kv.get_ints("strides", m.backbone.strides);
  m.backbone.channels = static_cast<int>(kv.get_int("channels", m.backbone.channels));
  m.theta_reduction = static_cast<int>(kv.get_int("theta_reduction", m.theta_reduction));
  m.sampling_points = static_cast<int>(kv.get_int("sampling_points", m.sampling_points));
  m.anchor_scales = kv.get_doubles("anchor_scales", m.anchor_scales);
  m.anchor_ratios = kv.get_doubles("anchor_ratios", m.anchor_ratios);
  m.validate();
  return m;
}

void ModelConfig::to_keys(KeyValues& kv) const {
  kv.set("input_size", std::to_string(input_size));
  kv.set("categories", std::to_string(num_categories));
  kv.set("stem", std::to_string(backbone.stem));
  kv.set("widths", join_ints(backbone.widths));
  kv.set("strides", join_ints(backbone.strides));
  kv.set("channels", std::to_string(backbone.channels));
  kv.set("theta_reduction", std::to_string(theta_reduction));
  kv.set("sampling_points", std::to_string(sampling_points));
  kv.set("anchor_scales", join_doubles(anchor_scales));
  kv.set("anchor_ratios", join_doubles(anchor_ratios));
}

namespace {

double he_bound(Index fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

void push_multiscale(std::vector<ParamSpec>& specs, const std::string& prefix, int c) {
  using I = ParamSpec::Init;
  // Three summed convs: each gets a third of the variance budget.
  for (int k : {1, 3, 5}) {
    const std::string p = prefix + ".ms" + std::to_string(k);
    specs.push_back({p + ".k", {k, k, c, c}, I::kUniform, he_bound(k * k * c) / std::sqrt(3.0)});
    specs.push_back({p + ".b", {c}, I::kZero, 0});
  }
}

}  // namespace

std::vector<ParamSpec> head_params(const ModelConfig& cfg) {
  using I = ParamSpec::Init;
  const int c = cfg.backbone.channels;
  const int k = cfg.sampling_points;
  const int hidden = c / cfg.theta_reduction;
  const int b = cfg.anchors_per_cell();
  const int n = cfg.num_categories;
  std::vector<ParamSpec> specs;
  specs.push_back({"dvf.scale.w", {1, 1, 1, 1}, I::kZero, 0});
  specs.push_back({"dvf.scale.b", {1}, I::kConstant, 0.6});
  specs.push_back({"dvf.offset.w", {3, 3, c, 4 * k}, I::kZero, 0});
  specs.push_back({"dvf.offset.b", {4 * k}, I::kZero, 0});  // segments set in init_params
  specs.push_back({"dvf.theta.w1", {c, hidden}, I::kUniform, he_bound(c)});
  specs.push_back({"dvf.theta.b1", {hidden}, I::kZero, 0});
  specs.push_back({"dvf.theta.w2", {hidden, 4 * c}, I::kUniform, 0.05});
  specs.push_back({"dvf.theta.b2", {4 * c}, I::kZero, 0});  // a1 entries set in init_params
  push_multiscale(specs, "head.cls", c);
  specs.push_back({"head.cls.w", {1, 1, c, b * (n + 1)}, I::kZero, 0});
  specs.push_back({"head.cls.b", {b * (n + 1)}, I::kZero, 0});  // objectness entries set in init_params
  push_multiscale(specs, "head.box", c);
  specs.push_back({"head.box.w", {1, 1, c, b * 4}, I::kUniform, 0.1 / std::sqrt(static_cast<double>(c))});
  specs.push_back({"head.box.b", {b * 4}, I::kZero, 0});
  return specs;
}

std::vector<ParamSpec> model_params(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> specs = backbone_params(cfg.backbone);
  for (ParamSpec& s : head_params(cfg)) specs.push_back(std::move(s));
  return specs;
}

template <typename Scalar>
std::size_t Params<Scalar>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw ConfigError("no parameter named '" + name + "'");
}

template <typename Scalar>
Index Params<Scalar>::element_count() const {
  Index n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

inline constexpr double kObjectnessPrior = -4.0;

template <typename Scalar>
Params<Scalar> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  Params<Scalar> p;
  Rng rng(seed);
  for (const ParamSpec& s : model_params(cfg)) {
    Tensor<Scalar> t(s.shape, Scalar(0));
    switch (s.init) {
      case ParamSpec::Init::kUniform:
        for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(rng.uniform(-s.bound, s.bound));
        break;
      case ParamSpec::Init::kConstant:
        t.fill(static_cast<Scalar>(s.bound));
        break;
      case ParamSpec::Init::kZero:
        break;
    }
    p.names.push_back(s.name);
    p.tensors.push_back(std::move(t));
  }
  const Index k = cfg.sampling_points;
  // Offsets start on the regular grid, masks at 0.9, weights average the K
  // samples.
  Tensor<Scalar>& ob = p.tensors[p.index_of("dvf.offset.b")];
  for (Index i = 2 * k; i < 3 * k; ++i) ob[i] = Scalar(0.8);
  for (Index i = 3 * k; i < 4 * k; ++i) ob[i] = Scalar(1) / static_cast<Scalar>(k);
  // Task attention starts near max(0.9 x, 0): a1 = 0.9, a2 = b1 = b2 = 0.
  Tensor<Scalar>& tb = p.tensors[p.index_of("dvf.theta.b2")];
  for (Index c = 0; c < cfg.backbone.channels; ++c) tb[c * 4] = static_cast<Scalar>(std::log(19.0));
  // Rare positives: objectness starts low so the no-object term is small.
  Tensor<Scalar>& cb = p.tensors[p.index_of("head.cls.b")];
  const Index n = cfg.num_categories;
  for (Index b = 0; b < cfg.anchors_per_cell(); ++b) cb[b * (n + 1) + n] = static_cast<Scalar>(kObjectnessPrior);
  return p;
}

template <typename Scalar>
ModelVars bind_params(Tape<Scalar>& tape, const Params<Scalar>& params, const ModelConfig& cfg,
                      bool trainable) {
  std::vector<Var> all;
  for (const auto& t : params.tensors) all.push_back(trainable ? tape.variable(t) : tape.constant(t));
  return assemble_vars(params.names, std::move(all), cfg);
}

ModelVars assemble_vars(const std::vector<std::string>& names, std::vector<Var> all, const ModelConfig& cfg) {
  if (names.size() != all.size()) throw DimensionError("assemble_vars: one handle per parameter name required");
  ModelVars v;
  v.all = std::move(all);
  auto at = [&](const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return v.all[i];
    throw ConfigError("no parameter named '" + name + "'");
  };

  v.backbone.stem_k = at("backbone.stem.k");
  v.backbone.stem_b = at("backbone.stem.b");
  for (std::size_t i = 0; i < cfg.backbone.widths.size(); ++i) {
    const std::string p = "backbone.stage" + std::to_string(i + 1);
    v.backbone.stage_k.push_back(at(p + ".k"));
    v.backbone.stage_b.push_back(at(p + ".b"));
  }
  for (std::size_t l = 0; l < cfg.backbone.strides.size(); ++l) {
    const std::string p = "backbone.proj" + std::to_string(l);
    v.backbone.proj_k.push_back(at(p + ".k"));
    v.backbone.proj_b.push_back(at(p + ".b"));
  }

  v.dvf.scale_w = at("dvf.scale.w");
  v.dvf.scale_b = at("dvf.scale.b");
  v.dvf.offset_w = at("dvf.offset.w");
  v.dvf.offset_b = at("dvf.offset.b");
  v.dvf.theta_w1 = at("dvf.theta.w1");
  v.dvf.theta_b1 = at("dvf.theta.b1");
  v.dvf.theta_w2 = at("dvf.theta.w2");
  v.dvf.theta_b2 = at("dvf.theta.b2");
  v.dvf.sampling_points = cfg.sampling_points;

  auto ms = [&](const std::string& prefix) {
    return MultiScaleVars{at(prefix + ".ms1.k"), at(prefix + ".ms1.b"), at(prefix + ".ms3.k"),
                          at(prefix + ".ms3.b"), at(prefix + ".ms5.k"), at(prefix + ".ms5.b")};
  };
  v.head.cls_ms = ms("head.cls");
  v.head.cls_w = at("head.cls.w");
  v.head.cls_b = at("head.cls.b");
  v.head.box_ms = ms("head.box");
  v.head.box_w = at("head.box.w");
  v.head.box_b = at("head.box.b");
  v.head.anchors_per_cell = cfg.anchors_per_cell();
  v.head.num_categories = cfg.num_categories;
  v.head.branch_slope = cfg.backbone.slope;
  return v;
}

template <typename Scalar>
Tensor<Scalar> image_input(const Image& image) {
  if (image.rank() != 3 || image.dim(2) != 3) throw DimensionError("image must be [H,W,3]");
  Tensor<Scalar> t({1, image.dim(0), image.dim(1), 3});
  for (Index i = 0; i < image.size(); ++i) t[i] = static_cast<Scalar>(image[i]) - Scalar(0.5);
  return t;
}

template <typename Scalar>
ForwardResult<Scalar> model_forward(Tape<Scalar>& tape, Var image, const ModelConfig& cfg,
                                    const ModelVars& vars) {
  ForwardResult<Scalar> out;
  out.levels = backbone_forward(tape, image, cfg.backbone, vars.backbone);
  const PyramidFeatures pyr = make_pyramid(tape, out.levels);
  out.common = pyr.common;
  out.dvf = dvf_apply(tape, pyr.common, pyr.median_level, vars.dvf);

  std::vector<Var> logits, obj, boxes;
  for (std::size_t l = 0; l < out.levels.size(); ++l) {
    const Tensor<Scalar>& lv = tape.value(out.levels[l]);
    const Index h = lv.dim(0), w = lv.dim(1), c = lv.dim(2);
    Var back = resize_bilinear(tape, select(tape, out.dvf, static_cast<Index>(l)), h, w);
    Var x = reshape(tape, add(tape, out.levels[l], back), Shape{1, h, w, c});
    const HeadOutput<Scalar> head = jgr_forward(tape, x, vars.head);
    logits.push_back(head.class_logits);
    obj.push_back(head.objectness);
    boxes.push_back(head.box_params);
  }
  out.class_logits = concat_rows(tape, logits);
  out.objectness = concat_rows(tape, obj);
  out.box_params = concat_rows(tape, boxes);
  return out;
}

TargetSet build_targets(const std::vector<GroundTruth>& gts, const AnchorSet& anchors, double clamp_eps) {
  TargetSet t;
  t.assignment = assign_targets(gts, anchors);
  const Assignment& a = t.assignment;
  for (Index i = 0; i < anchors.total(); ++i)
    if (a.role[static_cast<std::size_t>(i)] == AnchorRole::kPositive) t.positives.push_back(i);
  t.coord_targets = Tensor<double>({static_cast<Index>(t.positives.size()), 4});
  for (std::size_t p = 0; p < t.positives.size(); ++p) {
    const Index anchor = t.positives[p];
    const GroundTruth& g = a.gts[static_cast<std::size_t>(a.matched_gt[static_cast<std::size_t>(anchor)])];
    const AnchorLocation loc = anchors.locate(anchor);
    const AnchorLevel& lv = anchors.levels[static_cast<std::size_t>(loc.level)];
    const BoxParams bp = encode_box(g.box, loc.ix, loc.iy, lv.grid_w, lv.grid_h,
                                    lv.sizes[static_cast<std::size_t>(loc.b)], clamp_eps);
    t.labels.push_back(g.category);
    const Index r = static_cast<Index>(p) * 4;
    t.coord_targets[r] = bp.tx;
    t.coord_targets[r + 1] = bp.ty;
    t.coord_targets[r + 2] = bp.tw;
    t.coord_targets[r + 3] = bp.th;
  }
  return t;
}

namespace {

BoxN decode_anchor(const AnchorSet& anchors, Index anchor, const double* t) {
  const AnchorLocation loc = anchors.locate(anchor);
  const AnchorLevel& lv = anchors.levels[static_cast<std::size_t>(loc.level)];
  return decode_box(loc.ix, loc.iy, lv.grid_w, lv.grid_h, lv.sizes[static_cast<std::size_t>(loc.b)],
                    {t[0], t[1], t[2], t[3]});
}

}  // namespace

template <typename Scalar>
std::vector<Scalar> objectness_targets(const Tensor<Scalar>& boxes, const TargetSet& targets,
                                       const AnchorSet& anchors) {
  std::vector<Scalar> out(static_cast<std::size_t>(anchors.total()), Scalar(0));
  for (Index a : targets.positives) {
    const double t[4] = {static_cast<double>(boxes[a * 4]), static_cast<double>(boxes[a * 4 + 1]),
                         static_cast<double>(boxes[a * 4 + 2]), static_cast<double>(boxes[a * 4 + 3])};
    const GroundTruth& g =
        targets.assignment.gts[static_cast<std::size_t>(targets.assignment.matched_gt[static_cast<std::size_t>(a)])];
    out[static_cast<std::size_t>(a)] = static_cast<Scalar>(iou(decode_anchor(anchors, a, t), g.box));
  }
  return out;
}

template <typename Scalar>
LossVars image_loss(Tape<Scalar>& tape, const ForwardResult<Scalar>& out, const TargetSet& targets,
                    const AnchorSet& anchors, const LossConfig& cfg, const std::vector<Scalar>* fixed_objectness) {
  LossVars lv;
  const Index total = anchors.total();
  const Tensor<Scalar>& boxes = tape.value(out.box_params);
  if (boxes.dim(0) != total) {
    throw DimensionError("head produced " + std::to_string(boxes.dim(0)) + " anchors, anchor set has " +
                         std::to_string(total));
  }
  const Index np = static_cast<Index>(targets.positives.size());
  std::vector<Scalar> obj_targets =
      fixed_objectness ? *fixed_objectness : objectness_targets(boxes, targets, anchors);
  if (cfg.objectness_target == ObjectnessTarget::kOne) {
    for (Index a : targets.positives) obj_targets[static_cast<std::size_t>(a)] = Scalar(1);
  }

  if (np > 0) {
    Var cls_rows = gather_rows(tape, out.class_logits, targets.positives);
    Var box_rows = gather_rows(tape, out.box_params, targets.positives);
    lv.cls = cls_loss(tape, cls_rows, targets.labels, cfg);
    lv.coord = coord_loss(tape, box_rows, targets.coord_targets.template cast<Scalar>());
  } else {
    lv.cls = tape.constant(Tensor<Scalar>::scalar(Scalar(0)));
    lv.coord = tape.constant(Tensor<Scalar>::scalar(Scalar(0)));
  }
  lv.conf = confidence_loss(tape, out.objectness, targets.assignment.role, obj_targets, cfg);
  lv.total = total_loss(tape, lv.cls, lv.coord, lv.conf, cfg);
  return lv;
}

template <typename Scalar>
std::vector<Detection> decode_detections(const Tensor<Scalar>& class_logits, const Tensor<Scalar>& objectness,
                                         const Tensor<Scalar>& box_params, const AnchorSet& anchors,
                                         const DecodeOptions& opt) {
  const Index total = anchors.total();
  const Index n = class_logits.dim(1);
  std::vector<Detection> cand;
  for (Index a = 0; a < total; ++a) {
    BoxN box{};
    bool decoded = false;
    Index best = 0;
    for (Index c = 1; c < n; ++c)
      if (class_logits[a * n + c] > class_logits[a * n + best]) best = c;
    for (Index c = 0; c < n; ++c) {
      if (opt.best_class_only && c != best) continue;
      const double score = static_cast<double>(joint_score(class_logits[a * n + c], objectness[a]));
      if (score < opt.conf_threshold) continue;
      if (!decoded) {
        const double t[4] = {static_cast<double>(box_params[a * 4]), static_cast<double>(box_params[a * 4 + 1]),
                             static_cast<double>(box_params[a * 4 + 2]), static_cast<double>(box_params[a * 4 + 3])};
        box = decode_anchor(anchors, a, t);
        decoded = true;
      }
      cand.push_back({box, static_cast<int>(c), score});
    }
  }
  std::stable_sort(cand.begin(), cand.end(), ranks_before);
  if (cand.size() > opt.max_candidates) cand.resize(opt.max_candidates);
  std::vector<Detection> kept;
  for (std::size_t i : nms(cand, opt.nms_iou)) {
    if (kept.size() == opt.max_detections) break;
    kept.push_back(cand[i]);
  }
  return kept;
}

template <typename Scalar>
std::vector<Detection> detect(const Params<Scalar>& params, const ModelConfig& cfg, const Image& image,
                              const DecodeOptions& opt) {
  Tape<Scalar> tape;
  tape.set_grad_enabled(false);
  const ModelVars vars = bind_params(tape, params, cfg, false);
  const Image sized = (image.dim(0) == cfg.input_size && image.dim(1) == cfg.input_size)
                          ? image
                          : resize_image(image, cfg.input_size, cfg.input_size);
  Var x = tape.constant(image_input<Scalar>(sized));
  const ForwardResult<Scalar> out = model_forward(tape, x, cfg, vars);
  return decode_detections(tape.value(out.class_logits), tape.value(out.objectness), tape.value(out.box_params),
                           cfg.anchors(), opt);
}

// --- checkpoints -------------------------------------------------------------

namespace {

constexpr const char* kCheckpointMagic = "ADAHEAD-CHECKPOINT 1";

template <typename Scalar>
constexpr const char* precision_tag() {
  return sizeof(Scalar) == 4 ? "f32" : "f64";
}

std::string expect_line(std::istream& in, const std::string& key, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0) {
    throw IoError("checkpoint " + path + ": expected '" + key + "' line");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

template <typename Scalar>
void save_checkpoint(const std::string& path, const Checkpoint<Scalar>& ck) {
  // Write to a sibling file first so an interrupted save keeps the old one.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + tmp);
    std::ostringstream cfg;
    ck.config.write(cfg);
    const std::string cfg_text = cfg.str();
    out << kCheckpointMagic << '\n';
    out << "precision " << precision_tag<Scalar>() << '\n';
    out << "epoch " << ck.epoch << '\n';
    out << "rng " << ck.rng_state << '\n';
    out << "config " << std::count(cfg_text.begin(), cfg_text.end(), '\n') << '\n' << cfg_text;
    out << "params " << ck.params.names.size() << '\n';
    for (std::size_t i = 0; i < ck.params.names.size(); ++i) {
      out << ck.params.names[i] << ' ' << shape_string(ck.params.tensors[i].shape()) << '\n';
    }
    for (const auto& t : ck.params.tensors) {
      if constexpr (sizeof(Scalar) == 4) {
        write_tnsr(out, t);
      } else {
        write_tnsd(out, t);
      }
    }
    if (!out) throw IoError("short write: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + path + ": " + ec.message());
}

std::string checkpoint_precision(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  std::string magic;
  if (!std::getline(in, magic) || magic != kCheckpointMagic) throw IoError("not a checkpoint: " + path);
  const std::string p = expect_line(in, "precision", path);
  if (p != "f32" && p != "f64") throw IoError("checkpoint " + path + ": unknown precision '" + p + "'");
  return p;
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  std::string magic;
  if (!std::getline(in, magic) || magic != kCheckpointMagic) throw IoError("not a checkpoint: " + path);
  const std::string prec = expect_line(in, "precision", path);
  if (prec != precision_tag<Scalar>()) {
    throw ValidationError("checkpoint " + path + " stores " + prec + " parameters, running in " +
                          precision_tag<Scalar>() + " mode");
  }
  Checkpoint<Scalar> ck;
  try {
    ck.epoch = std::stol(expect_line(in, "epoch", path));
    ck.rng_state = expect_line(in, "rng", path);
    const long cfg_lines = std::stol(expect_line(in, "config", path));
    std::string text, line;
    for (long i = 0; i < cfg_lines && std::getline(in, line); ++i) text += line + '\n';
    std::istringstream cfg(text);
    ck.config = KeyValues::parse(cfg);
    const long count = std::stol(expect_line(in, "params", path));
    std::vector<Shape> shapes;
    for (long i = 0; i < count; ++i) {
      if (!std::getline(in, line)) throw IoError("checkpoint " + path + ": truncated manifest");
      const auto sp = line.find(' ');
      ck.params.names.push_back(line.substr(0, sp));
    }
    for (long i = 0; i < count; ++i) {
      if constexpr (sizeof(Scalar) == 4) {
        ck.params.tensors.push_back(read_tnsr(in));
      } else {
        ck.params.tensors.push_back(read_tnsd(in));
      }
    }
  } catch (const std::invalid_argument&) {
    throw IoError("checkpoint " + path + ": malformed header");
  } catch (const std::out_of_range&) {
    throw IoError("checkpoint " + path + ": malformed header");
  }
  return ck;
}

#define ADAHEAD_INSTANTIATE_MODEL(S)                                                                     \
  template struct Params<S>;                                                                             \
  template Params<S> init_params(const ModelConfig&, std::uint64_t);                                     \
  template ModelVars bind_params(Tape<S>&, const Params<S>&, const ModelConfig&, bool);                  \
  template Tensor<S> image_input(const Image&);                                                          \
  template ForwardResult<S> model_forward(Tape<S>&, Var, const ModelConfig&, const ModelVars&);          \
  template std::vector<S> objectness_targets(const Tensor<S>&, const TargetSet&, const AnchorSet&);      \
  template LossVars image_loss(Tape<S>&, const ForwardResult<S>&, const TargetSet&, const AnchorSet&,    \
                               const LossConfig&, const std::vector<S>*);                                \
  template std::vector<Detection> decode_detections(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, \
                                                    const AnchorSet&, const DecodeOptions&);             \
  template std::vector<Detection> detect(const Params<S>&, const ModelConfig&, const Image&,             \
                                         const DecodeOptions&);                                          \
  template void save_checkpoint(const std::string&, const Checkpoint<S>&);                               \
  template Checkpoint<S> load_checkpoint(const std::string&);

ADAHEAD_INSTANTIATE_MODEL(float)
ADAHEAD_INSTANTIATE_MODEL(double)

}  // namespace adahead
