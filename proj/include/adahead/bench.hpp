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

#ifndef ADAHEAD_BENCH_HPP_
#define ADAHEAD_BENCH_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "adahead/model.hpp"

namespace adahead {

// Only convolutions and affine maps are counted; one multiply-add is two
// FLOPs.
std::int64_t conv_flops(std::int64_t k, std::int64_t cin, std::int64_t cout, std::int64_t out_h,
                        std::int64_t out_w);
std::int64_t affine_flops(std::int64_t cin, std::int64_t cout, std::int64_t rows = 1);
std::int64_t conv_params(std::int64_t k, std::int64_t cin, std::int64_t cout, bool bias = true);

struct LayerCost {
  std::string name;
  std::int64_t params = 0;
  std::int64_t flops = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;

  std::int64_t params() const;
  std::int64_t flops() const;
  void add(std::string name, std::int64_t params, std::int64_t flops);
};

CostReport backbone_cost(const BackboneConfig& cfg, Index input_size);
// DVF stack plus the JGRM branches applied to every level (weights shared).
CostReport ada_head_cost(const ModelConfig& cfg);
// Matched-channel decoupled head: per branch a 3x3 conv C->C and a 1x1
// output conv, applied to every level.
CostReport plain_head_cost(const ModelConfig& cfg);

void write_bench_report(std::ostream& os, const ModelConfig& cfg);

}  // namespace adahead

#endif  // ADAHEAD_BENCH_HPP_
