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

#ifndef ADAHEAD_OPS_HPP_
#define ADAHEAD_OPS_HPP_

#include <vector>

#include "adahead/tape.hpp"
#include "adahead/tensor.hpp"

// Differentiable kernels. Every op takes the tape it records on, reads its
// inputs from it and returns the handle of the result. Accumulation order is
// fixed (row-major, left to right) so results are bit-reproducible.
namespace adahead {

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  // "same" padding for odd k: (k - 1) / 2.
  static Conv2dOptions same(Index k, int stride = 1) {
    return {stride, static_cast<int>((k - 1) / 2)};
  }
};

inline Index conv_output_size(Index in, Index k, int stride, int padding) {
  return (in + 2 * padding - k) / stride + 1;
}

// input [N,H,W,Cin], kernel [k,k,Cin,Cout], bias [Cout] or invalid Var.
template <typename Scalar>
Var conv2d(Tape<Scalar>& tape, Var input, Var kernel, Var bias, Conv2dOptions opt);

// x [..., Cin] times weights [Cin, Cout] plus bias [Cout] over the last axis.
template <typename Scalar>
Var affine(Tape<Scalar>& tape, Var x, Var weights, Var bias);

template <typename Scalar>
Var reduce_mean(Tape<Scalar>& tape, Var x, std::vector<int> axes, bool keepdims);

template <typename Scalar>
Var hard_sigmoid(Tape<Scalar>& tape, Var x);
template <typename Scalar>
Var shifted_sigmoid(Tape<Scalar>& tape, Var x);
template <typename Scalar>
Var sigmoid(Tape<Scalar>& tape, Var x);
template <typename Scalar>
Var leaky_relu(Tape<Scalar>& tape, Var x, Scalar slope);

template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b);
template <typename Scalar>
Var sub(Tape<Scalar>& tape, Var a, Var b);
template <typename Scalar>
Var mul(Tape<Scalar>& tape, Var a, Var b);
template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var a, Scalar s);
template <typename Scalar>
Var add_constant(Tape<Scalar>& tape, Var a, const Tensor<Scalar>& c);

// x * g where every axis of g is 1 or matches x.
template <typename Scalar>
Var mul_broadcast(Tape<Scalar>& tape, Var x, Var g);

template <typename Scalar>
Var reshape(Tape<Scalar>& tape, Var x, Shape shape);
// Channels [begin, end) of the last axis.
template <typename Scalar>
Var slice_last(Tape<Scalar>& tape, Var x, Index begin, Index end);
// Sub-tensor at `index` of axis 0 (the axis is dropped).
template <typename Scalar>
Var select(Tape<Scalar>& tape, Var x, Index index);
// Stacks equally shaped tensors on a new leading axis.
template <typename Scalar>
Var stack(Tape<Scalar>& tape, const std::vector<Var>& parts);
// Concatenates along axis 0; trailing axes must agree.
template <typename Scalar>
Var concat_rows(Tape<Scalar>& tape, const std::vector<Var>& parts);
template <typename Scalar>
Var gather_rows(Tape<Scalar>& tape, Var x, const std::vector<Index>& rows);

// Bilinear resample of x [H,W,C] with half-pixel centers (align_corners=false),
// source coordinates clamped to the valid range.
template <typename Scalar>
Var resize_bilinear(Tape<Scalar>& tape, Var x, Index out_h, Index out_w);
template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& x, Index out_h, Index out_w);

// Standardizes the whole tensor to zero mean / unit variance.
template <typename Scalar>
Var standardize(Tape<Scalar>& tape, Var x, Scalar eps);

// Sparse sampling aggregate. F [L,H,W,C]; offsets [H,W,K,2] hold the (dy,dx)
// displacement of sample k from position p; masks, weights [H,W,K]. Output
// [L,H,W,C] where every level row holds
//   A[p,c] = mean_l sum_k weights[p,k] * F[l, p + offsets[p,k], c] * masks[p,k]
// Fractional positions are bilinear; samples outside the map read zero.
template <typename Scalar>
Var deform_aggregate(Tape<Scalar>& tape, Var features, Var offsets, Var masks,
                     Var weights);

// out[..., c] = max(x * a1 + b1, x * a2 + b2) with theta [C,4] = (a1,a2,b1,b2).
// Ties route the gradient to the first branch.
template <typename Scalar>
Var dynamic_relu(Tape<Scalar>& tape, Var x, Var theta);

// sum_i w_i * parts_i over scalar parts.
template <typename Scalar>
Var weighted_sum(Tape<Scalar>& tape, const std::vector<Var>& parts,
                 const std::vector<Scalar>& weights);

// Sum of all elements times `factor`.
template <typename Scalar>
Var sum_all(Tape<Scalar>& tape, Var x, Scalar factor = Scalar(1));

}  // namespace adahead

#endif  // ADAHEAD_OPS_HPP_
