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

#include "adahead/backbone.hpp"

#include <cmath>

namespace adahead {

void BackboneConfig::validate() const {
  if (in_channels < 1 || stem < 1 || channels < 1) throw ConfigError("backbone widths must be positive");
  if (widths.empty()) throw ConfigError("backbone needs at least one stage");
  for (int w : widths)
    if (w < 1) throw ConfigError("backbone stage widths must be positive");
  if (strides.empty()) throw ConfigError("backbone needs at least one output stride");
  level_stages();
}

std::vector<int> BackboneConfig::level_stages() const {
  std::vector<int> out;
  for (int s : strides) {
    int stage = -1;
    for (int i = 0; i < static_cast<int>(widths.size()); ++i)
      if ((1 << (i + 1)) == s) stage = i;
    if (stage < 0) {
      throw ConfigError("stride " + std::to_string(s) + " is not produced by any of the " +
                        std::to_string(widths.size()) + " stride-2 stages");
    }
    if (!out.empty() && stage <= out.back()) throw ConfigError("strides must be strictly increasing");
    out.push_back(stage);
  }
  return out;
}

int BackboneConfig::max_stride() const { return strides.back(); }

namespace {

double he_bound(Index fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

}  // namespace

std::vector<ParamSpec> backbone_params(const BackboneConfig& cfg) {
  cfg.validate();
  using I = ParamSpec::Init;
  std::vector<ParamSpec> specs;
  specs.push_back({"backbone.stem.k", {3, 3, cfg.in_channels, cfg.stem}, I::kUniform, he_bound(9 * cfg.in_channels)});
  specs.push_back({"backbone.stem.b", {cfg.stem}, I::kZero, 0});
  int cin = cfg.stem;
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    const std::string p = "backbone.stage" + std::to_string(i + 1);
    specs.push_back({p + ".k", {3, 3, cin, cfg.widths[i]}, I::kUniform, he_bound(9 * cin)});
    specs.push_back({p + ".b", {cfg.widths[i]}, I::kZero, 0});
    cin = cfg.widths[i];
  }
  const std::vector<int> stages = cfg.level_stages();
  for (std::size_t l = 0; l < stages.size(); ++l) {
    const int w = cfg.widths[static_cast<std::size_t>(stages[l])];
    const std::string p = "backbone.proj" + std::to_string(l);
    specs.push_back({p + ".k", {1, 1, w, cfg.channels}, I::kUniform, he_bound(w)});
    specs.push_back({p + ".b", {cfg.channels}, I::kZero, 0});
  }
  return specs;
}

Index backbone_extent(Index input, int stages) {
  Index e = input;
  for (int s = 0; s < stages; ++s) e = conv_output_size(e, 3, 2, 1);
  return e;
}

template <typename Scalar>
std::vector<Var> backbone_forward(Tape<Scalar>& tape, Var image, const BackboneConfig& cfg,
                                  const BackboneVars& vars) {
  const std::vector<int> stages = cfg.level_stages();
  const Scalar slope = static_cast<Scalar>(cfg.slope);
  Var x = leaky_relu(tape, conv2d(tape, image, vars.stem_k, vars.stem_b, Conv2dOptions::same(3)), slope);
  std::vector<Var> stage_out;
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    x = leaky_relu(tape, conv2d(tape, x, vars.stage_k[i], vars.stage_b[i], Conv2dOptions::same(3, 2)), slope);
    stage_out.push_back(x);
  }
  std::vector<Var> levels;
  for (std::size_t l = 0; l < stages.size(); ++l) {
    Var s = stage_out[static_cast<std::size_t>(stages[l])];
    Var p = leaky_relu(tape, conv2d(tape, s, vars.proj_k[l], vars.proj_b[l], Conv2dOptions{}), slope);
    const Tensor<Scalar>& v = tape.value(p);
    levels.push_back(reshape(tape, p, Shape{v.dim(1), v.dim(2), v.dim(3)}));
  }
  return levels;
}

template std::vector<Var> backbone_forward(Tape<float>&, Var, const BackboneConfig&, const BackboneVars&);
template std::vector<Var> backbone_forward(Tape<double>&, Var, const BackboneConfig&, const BackboneVars&);

}  // namespace adahead
