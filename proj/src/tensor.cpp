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

#include "adahead/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace adahead {

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] <= 0) {
      throw DimensionError("non-positive size on axis " + std::to_string(i) +
                           " of shape " + shape_string(shape));
    }
  }
}

}  // namespace

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Scalar fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(static_cast<std::size_t>(shape_size(shape_)), fill);
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, std::vector<Scalar> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (static_cast<Index>(data_.size()) != shape_size(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

template <typename Scalar>
Index Tensor<Scalar>::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + shape_string(shape_));
  }
  return shape_[static_cast<std::size_t>(axis)];
}

template <typename Scalar>
Index Tensor<Scalar>::flat_index(std::initializer_list<Index> idx) const {
  if (static_cast<int>(idx.size()) != rank()) {
    throw DimensionError("index rank mismatch for shape " +
                         shape_string(shape_));
  }
  Index flat = 0;
  std::size_t axis = 0;
  for (Index i : idx) {
    if (i < 0 || i >= shape_[axis]) {
      throw DimensionError("index out of range on axis " +
                           std::to_string(axis));
    }
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return flat;
}

template <typename Scalar>
Scalar& Tensor<Scalar>::at(std::initializer_list<Index> idx) {
  return data_[static_cast<std::size_t>(flat_index(idx))];
}

template <typename Scalar>
Scalar Tensor<Scalar>::at(std::initializer_list<Index> idx) const {
  return data_[static_cast<std::size_t>(flat_index(idx))];
}

template <typename Scalar>
Scalar Tensor<Scalar>::item() const {
  if (data_.size() != 1) {
    throw DimensionError("item() on non-scalar tensor " +
                         shape_string(shape_));
  }
  return data_[0];
}

template <typename Scalar>
MatrixMap<Scalar> Tensor<Scalar>::matrix() {
  const Index cols = shape_.back();
  return MatrixMap<Scalar>(data_.data(), size() / cols, cols);
}

template <typename Scalar>
ConstMatrixMap<Scalar> Tensor<Scalar>::matrix() const {
  const Index cols = shape_.back();
  return ConstMatrixMap<Scalar>(data_.data(), size() / cols, cols);
}

template <typename Scalar>
MatrixMap<Scalar> Tensor<Scalar>::matrix(Index rows, Index cols) {
  if (rows * cols != size()) {
    throw DimensionError("matrix view " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " of shape " +
                         shape_string(shape_));
  }
  return MatrixMap<Scalar>(data_.data(), rows, cols);
}

template <typename Scalar>
ConstMatrixMap<Scalar> Tensor<Scalar>::matrix(Index rows, Index cols) const {
  if (rows * cols != size()) {
    throw DimensionError("matrix view " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " of shape " +
                         shape_string(shape_));
  }
  return ConstMatrixMap<Scalar>(data_.data(), rows, cols);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " +
                         shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename Scalar>
void Tensor<Scalar>::fill(Scalar v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename Scalar>
bool Tensor<Scalar>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](Scalar v) { return std::isfinite(v); });
}

template <typename Scalar>
Scalar max_abs_diff(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_abs_diff shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  Scalar m = 0;
  for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little ||
                std::endian::native == std::endian::big);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw IoError("truncated tensor payload");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

template <typename Stored, typename Scalar>
void write_record(std::ostream& os, const char* magic, const Tensor<Scalar>& t) {
  os << magic << '\n' << t.rank();
  for (Index d : t.shape()) os << ' ' << d;
  os << '\n';
  for (Index i = 0; i < t.size(); ++i) put_le<Stored>(os, static_cast<Stored>(t[i]));
  if (!os) throw IoError("failed writing tensor");
}

template <typename Stored>
Tensor<Stored> read_record(std::istream& is, const std::string& magic) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("missing tensor magic");
  if (line != magic) throw IoError("bad tensor magic '" + line + "'");
  if (!std::getline(is, line)) throw IoError("missing tensor header");
  std::istringstream hs(line);
  int rank = 0;
  if (!(hs >> rank) || rank <= 0) throw IoError("bad tensor rank");
  Shape shape(static_cast<std::size_t>(rank));
  for (auto& d : shape) {
    if (!(hs >> d) || d <= 0) throw IoError("bad tensor dimension");
  }
  std::vector<Stored> data(static_cast<std::size_t>(shape_size(shape)));
  for (auto& v : data) v = get_le<Stored>(is);
  return Tensor<Stored>(std::move(shape), std::move(data));
}

}  // namespace

template <typename Scalar>
void write_tnsr(std::ostream& os, const Tensor<Scalar>& t) {
  write_record<float>(os, "TNSR", t);
}

Tensor<float> read_tnsr(std::istream& is) { return read_record<float>(is, "TNSR"); }

template <typename Scalar>
void write_tnsd(std::ostream& os, const Tensor<Scalar>& t) {
  write_record<double>(os, "TNSD", t);
}

Tensor<double> read_tnsd(std::istream& is) {
  return read_record<double>(is, "TNSD");
}

template class Tensor<float>;
template class Tensor<double>;
template float max_abs_diff(const Tensor<float>&, const Tensor<float>&);
template double max_abs_diff(const Tensor<double>&, const Tensor<double>&);
template void write_tnsr(std::ostream&, const Tensor<float>&);
template void write_tnsr(std::ostream&, const Tensor<double>&);
template void write_tnsd(std::ostream&, const Tensor<float>&);
template void write_tnsd(std::ostream&, const Tensor<double>&);

}  // namespace adahead
