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

#ifndef ADAHEAD_SCALAR_HPP_
#define ADAHEAD_SCALAR_HPP_

#include <algorithm>
#include <cmath>

namespace adahead {

template <typename T>
inline T logistic(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
inline T logit(T p) {
  return std::log(p) - std::log1p(-p);
}

// clamp((x + 1) / 2, 0, 1)
template <typename T>
inline T hard_sigmoid(T x) {
  return std::clamp((x + T(1)) * T(0.5), T(0), T(1));
}

// Zero at and beyond the kinks x = -1, x = 1.
template <typename T>
inline T hard_sigmoid_grad(T x) {
  return (x > T(-1) && x < T(1)) ? T(0.5) : T(0);
}

// 2 * logistic(x) - 1, range (-1, 1).
template <typename T>
inline T shifted_sigmoid(T x) {
  return T(2) * logistic(x) - T(1);
}

template <typename T>
inline T shifted_sigmoid_grad(T x) {
  const T s = logistic(x);
  return T(2) * s * (T(1) - s);
}

}  // namespace adahead

#endif  // ADAHEAD_SCALAR_HPP_
