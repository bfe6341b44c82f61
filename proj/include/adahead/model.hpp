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

#ifndef ADAHEAD_MODEL_HPP_
#define ADAHEAD_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "adahead/anchors.hpp"
#include "adahead/attention.hpp"
#include "adahead/backbone.hpp"
#include "adahead/config.hpp"
#include "adahead/losses.hpp"
#include "adahead/postprocess.hpp"
#include "adahead/synth.hpp"

namespace adahead {

struct ModelConfig {
  Index input_size = 160;
  int num_categories = 3;
  BackboneConfig backbone;
  int theta_reduction = 4;
  int sampling_points = 9;
  std::vector<double> anchor_scales{3, 4, 5};
  std::vector<double> anchor_ratios{1};

  void validate() const;
  int anchors_per_cell() const { return static_cast<int>(anchor_scales.size() * anchor_ratios.size()); }
  AnchorSet anchors() const;

  // Reads the model keys it knows; leaves the rest for the caller.
  static ModelConfig from_keys(const KeyValues& kv);
  void to_keys(KeyValues& kv) const;
};

std::vector<ParamSpec> head_params(const ModelConfig& cfg);
std::vector<ParamSpec> model_params(const ModelConfig& cfg);

// Named parameter tensors in a fixed order.
template <typename Scalar>
struct Params {
  std::vector<std::string> names;
  std::vector<Tensor<Scalar>> tensors;

  std::size_t index_of(const std::string& name) const;
  Index element_count() const;
};

// Seeded fan-in uniform init plus the fixed attention and output-layer
// starting points.
template <typename Scalar>
Params<Scalar> init_params(const ModelConfig& cfg, std::uint64_t seed);

struct ModelVars {
  BackboneVars backbone;
  DvfVars dvf;
  JgrVars head;
  std::vector<Var> all;  // same order as Params
};

// Puts every parameter on the tape (as variables when trainable).
template <typename Scalar>
ModelVars bind_params(Tape<Scalar>& tape, const Params<Scalar>& params, const ModelConfig& cfg,
                      bool trainable);

// Wires already-recorded handles (ordered as `names`) into the model slots.
ModelVars assemble_vars(const std::vector<std::string>& names, std::vector<Var> all, const ModelConfig& cfg);

// Image [H,W,3] in [0,1] -> centered network input [1,H,W,3].
template <typename Scalar>
Tensor<Scalar> image_input(const Image& image);

template <typename Scalar>
struct ForwardResult {
  std::vector<Var> levels;  // backbone maps [h,w,C]
  Var common;               // stacked pyramid [L,Hm,Wm,C]
  Var dvf;                  // DVF output [L,Hm,Wm,C]
  Var class_logits;         // [A, n], anchors in AnchorSet order
  Var objectness;           // [A, 1]
  Var box_params;           // [A, 4]
};

// Backbone, DVF over the pyramid, then the shared JGRM head on every level
// fed with the level map plus the DVF output resampled to that level.
template <typename Scalar>
ForwardResult<Scalar> model_forward(Tape<Scalar>& tape, Var image, const ModelConfig& cfg,
                                    const ModelVars& vars);

struct TargetSet {
  Assignment assignment;
  std::vector<Index> positives;   // anchor indices, ascending
  std::vector<int> labels;        // per positive
  Tensor<double> coord_targets;   // [P, 4]
};

inline constexpr double kTargetClampEps = 1e-2;

TargetSet build_targets(const std::vector<GroundTruth>& gts, const AnchorSet& anchors,
                        double clamp_eps = kTargetClampEps);

struct LossVars {
  Var cls, coord, conf, total;
};

// IoU of each positive anchor's decoded box with its GT; zero elsewhere.
template <typename Scalar>
std::vector<Scalar> objectness_targets(const Tensor<Scalar>& box_params, const TargetSet& targets,
                                       const AnchorSet& anchors);

// Per-image objective. Positive objectness targets are constants: the given
// ones, or objectness_targets() of the current prediction.
template <typename Scalar>
LossVars image_loss(Tape<Scalar>& tape, const ForwardResult<Scalar>& out, const TargetSet& targets,
                    const AnchorSet& anchors, const LossConfig& cfg,
                    const std::vector<Scalar>* fixed_objectness = nullptr);

struct DecodeOptions {
  double conf_threshold = kDefaultConfidence;
  double nms_iou = kDefaultNmsIou;
  std::size_t max_candidates = 1000;
  std::size_t max_detections = 100;
  // Emit only the best-scoring category of each anchor.
  bool best_class_only = true;
};

// Joint-score thresholding, box decoding and NMS, ranked output.
template <typename Scalar>
std::vector<Detection> decode_detections(const Tensor<Scalar>& class_logits, const Tensor<Scalar>& objectness,
                                         const Tensor<Scalar>& box_params, const AnchorSet& anchors,
                                         const DecodeOptions& opt);

// Forward without gradients and decode.
template <typename Scalar>
std::vector<Detection> detect(const Params<Scalar>& params, const ModelConfig& cfg, const Image& image,
                              const DecodeOptions& opt);

// --- checkpoints -------------------------------------------------------------

template <typename Scalar>
struct Checkpoint {
  KeyValues config;  // echo of the run configuration
  long epoch = 0;
  std::string rng_state;
  Params<Scalar> params;
};

// Text manifest followed by one TNSR (float) or TNSD (double) blob per
// parameter.
template <typename Scalar>
void save_checkpoint(const std::string& path, const Checkpoint<Scalar>& ck);
template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::string& path);

// Precision stored in a checkpoint ("f32" or "f64").
std::string checkpoint_precision(const std::string& path);

}  // namespace adahead

#endif  // ADAHEAD_MODEL_HPP_
