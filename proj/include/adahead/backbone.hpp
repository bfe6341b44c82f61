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

#ifndef ADAHEAD_BACKBONE_HPP_
#define ADAHEAD_BACKBONE_HPP_

#include <string>
#include <vector>

#include "adahead/ops.hpp"

namespace adahead {

// Shape and initialization recipe of one learnable tensor.
struct ParamSpec {
  enum class Init { kUniform, kZero, kConstant };
  std::string name;
  Shape shape;
  Init init = Init::kUniform;
  double bound = 0;  // half-width for kUniform, value for kConstant
};

// Stem 3x3 conv at stride 1, then one stride-2 3x3 conv per width; stage s
// runs at stride 2^s. Levels are read off the stages whose stride appears in
// `strides` and projected to `channels` with 1x1 convs.
struct BackboneConfig {
  int in_channels = 3;
  int stem = 16;
  std::vector<int> widths{16, 32, 64, 64, 64};
  std::vector<int> strides{8, 16, 32};
  int channels = 64;
  float slope = 0.1f;

  void validate() const;
  // Stage index (0-based into widths) producing each level.
  std::vector<int> level_stages() const;
  int max_stride() const;
};

std::vector<ParamSpec> backbone_params(const BackboneConfig& cfg);

struct BackboneVars {
  Var stem_k, stem_b;
  std::vector<Var> stage_k, stage_b;
  std::vector<Var> proj_k, proj_b;
};

// Map side length after the stem and `stages` stride-2 convs (ceil division
// per stage, equivalent to zero padding up to a multiple of the stride).
Index backbone_extent(Index input, int stages);

// image [1,H,W,in_channels] -> one [h_l, w_l, channels] map per stride.
template <typename Scalar>
std::vector<Var> backbone_forward(Tape<Scalar>& tape, Var image, const BackboneConfig& cfg,
                                  const BackboneVars& vars);

}  // namespace adahead

#endif  // ADAHEAD_BACKBONE_HPP_
