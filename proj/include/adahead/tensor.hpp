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

#ifndef ADAHEAD_TENSOR_HPP_
#define ADAHEAD_TENSOR_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "adahead/errors.hpp"

namespace adahead {

using Index = std::int64_t;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

Index shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major tensor. Value semantics; every dimension is >= 1.
template <typename Scalar>
class Tensor {
 public:
  using value_type = Scalar;

  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = Scalar(0));
  Tensor(Shape shape, std::vector<Scalar> data);
  Tensor(Shape shape, std::initializer_list<Scalar> data)
      : Tensor(std::move(shape), std::vector<Scalar>(data)) {}

  static Tensor scalar(Scalar v) { return Tensor(Shape{1}, {v}); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  Index dim(int axis) const;
  Index size() const { return static_cast<Index>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return data_; }
  std::span<const Scalar> values() const { return data_; }
  std::vector<Scalar>& storage() { return data_; }
  const std::vector<Scalar>& storage() const { return data_; }

  Scalar& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  Scalar operator[](Index i) const {
    return data_[static_cast<std::size_t>(i)];
  }
  Scalar& at(std::initializer_list<Index> idx);
  Scalar at(std::initializer_list<Index> idx) const;
  Scalar item() const;

  // Row-major matrix view with the last axis as columns.
  MatrixMap<Scalar> matrix();
  ConstMatrixMap<Scalar> matrix() const;
  MatrixMap<Scalar> matrix(Index rows, Index cols);
  ConstMatrixMap<Scalar> matrix(Index rows, Index cols) const;

  Tensor reshaped(Shape shape) const;
  void fill(Scalar v);
  bool all_finite() const;

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Index flat_index(std::initializer_list<Index> idx) const;

  Shape shape_;
  std::vector<Scalar> data_;
};

template <typename Scalar>
Scalar max_abs_diff(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

// TNSR dump: ASCII magic, one header line "rank d0 .. dr", then
// little-endian float32 payload in row-major order.
template <typename Scalar>
void write_tnsr(std::ostream& os, const Tensor<Scalar>& t);
Tensor<float> read_tnsr(std::istream& is);

// Full-precision variant used for 64-bit checkpoints ("TNSD", float64).
template <typename Scalar>
void write_tnsd(std::ostream& os, const Tensor<Scalar>& t);
Tensor<double> read_tnsd(std::istream& is);

}  // namespace adahead

#endif  // ADAHEAD_TENSOR_HPP_
