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

#ifndef ADAHEAD_GRADCHECK_SUITE_HPP_
#define ADAHEAD_GRADCHECK_SUITE_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "adahead/grad_check.hpp"

namespace adahead {

inline constexpr double kGradTolerance = 1e-4;

struct GradCase {
  std::string name;   // op or composite under test
  std::string scope;  // ops, head or loss
  GradGraph graph;
  std::vector<Tensor<double>> inputs;
};

struct GradCaseResult {
  std::string name;
  std::string scope;
  GradCheckResult check;
  bool passed = false;
};

// Cases of one scope; "all" returns every case.
std::vector<GradCase> gradcheck_cases(const std::string& scope);

// A scale op whose backward is off by 10%, for exercising failure reports.
GradCase corrupted_gradient_case();

GradCaseResult run_case(const GradCase& c, double tolerance = kGradTolerance);

// Runs every case of `scope`, printing one line per case when `log` is set.
std::vector<GradCaseResult> run_gradcheck(const std::string& scope, std::ostream* log,
                                          double tolerance = kGradTolerance);

void print_result(std::ostream& os, const GradCaseResult& r);

}  // namespace adahead

#endif  // ADAHEAD_GRADCHECK_SUITE_HPP_
