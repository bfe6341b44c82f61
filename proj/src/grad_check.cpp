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

#include "adahead/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adahead/ops.hpp"
#include "adahead/rng.hpp"

namespace adahead {

namespace {

struct Evaluation {
  double value;
  std::vector<Tensor<double>> grads;
};

Var contract(Tape<double>& tape, Var out, const Tensor<double>& projection) {
  if (tape.value(out).size() == 1) return out;
  Var w = tape.constant(projection);
  return sum_all(tape, mul(tape, out, w));
}

Tensor<double> projection_for(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> p(shape);
  for (Index i = 0; i < p.size(); ++i) p[i] = rng.uniform(-1.0, 1.0);
  return p;
}

}  // namespace

GradCheckResult grad_check(const GradGraph& graph, const std::vector<Tensor<double>>& inputs,
                           const GradCheckOptions& options) {
  Tensor<double> projection;
  auto evaluate = [&](const std::vector<Tensor<double>>& xs, bool with_grad) {
    Tape<double> tape;
    tape.set_grad_enabled(with_grad);
    std::vector<Var> vars;
    vars.reserve(xs.size());
    for (const auto& x : xs) vars.push_back(with_grad ? tape.variable(x) : tape.constant(x));
    Var out = graph(tape, vars);
    if (projection.empty() && tape.value(out).size() != 1) {
      projection = projection_for(tape.value(out).shape(), options.seed ^ 0x9e3779b97f4a7c15ULL);
    }
    Var loss = contract(tape, out, projection);
    Evaluation e{tape.value(loss).item(), {}};
    if (with_grad) {
      tape.backward(loss);
      for (Var v : vars) e.grads.push_back(tape.grad(v));
    }
    return e;
  };

  const Evaluation base = evaluate(inputs, true);
  GradCheckResult result;
  Rng pick(options.seed);
  std::vector<Tensor<double>> xs = inputs;
  for (std::size_t in = 0; in < xs.size(); ++in) {
    const Index n = xs[in].size();
    std::vector<Index> coords(static_cast<std::size_t>(n));
    std::iota(coords.begin(), coords.end(), Index(0));
    if (n > options.max_coords_per_input) {
      pick.shuffle(coords);
      coords.resize(static_cast<std::size_t>(options.max_coords_per_input));
      std::sort(coords.begin(), coords.end());
    }
    for (Index i : coords) {
      const double x0 = xs[in][i];
      const double eps = options.eps_scale * std::max(1.0, std::abs(x0));
      xs[in][i] = x0 + eps;
      const double fp = evaluate(xs, false).value;
      xs[in][i] = x0 - eps;
      const double fm = evaluate(xs, false).value;
      xs[in][i] = x0;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = base.grads[in][i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.coords_checked;
      if (rel > result.max_rel_error || result.worst_input < 0) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        if (rel >= result.max_rel_error) {
          result.worst_input = static_cast<int>(in);
          result.worst_coord = i;
          result.analytic = analytic;
          result.numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace adahead
