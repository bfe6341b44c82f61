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

#ifndef ADAHEAD_GRAD_CHECK_HPP_
#define ADAHEAD_GRAD_CHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adahead/tape.hpp"

namespace adahead {

using GradGraph = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

struct GradCheckOptions {
  // Perturbation is eps_scale * max(1, |x|).
  double eps_scale = 1e-5;
  // Coordinates checked per input; larger inputs are subsampled.
  Index max_coords_per_input = 256;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int worst_input = -1;
  Index worst_coord = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  Index coords_checked = 0;
};

// Compares reverse-mode gradients of `graph` against central differences.
// Non-scalar outputs are contracted with a fixed pseudo-random vector first.
// Relative error uses the denominator max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const GradGraph& graph, const std::vector<Tensor<double>>& inputs,
                           const GradCheckOptions& options = {});

}  // namespace adahead

#endif  // ADAHEAD_GRAD_CHECK_HPP_
