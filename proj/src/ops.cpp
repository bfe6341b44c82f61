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

#include "adahead/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adahead/scalar.hpp"

namespace adahead {

namespace {

template <typename Scalar>
using RowVecMap = Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>;

void require(bool ok, const std::string& op, const std::string& what) {
  if (!ok) throw DimensionError(op + ": " + what);
}

std::string axis_mismatch(const char* a, Index va, const char* b, Index vb) {
  return std::string(a) + "=" + std::to_string(va) + " vs " + b + "=" +
         std::to_string(vb);
}

struct ConvGeometry {
  Index n, h, w, cin, k, cout, ho, wo;
  int stride, pad;
  bool direct() const { return k == 1 && stride == 1 && pad == 0; }
  Index rows() const { return n * ho * wo; }
  Index patch() const { return k * k * cin; }
};

template <typename Scalar>
void im2col(const Scalar* x, const ConvGeometry& g, Scalar* cols) {
  const Index patch = g.patch();
  for (Index n = 0; n < g.n; ++n) {
    for (Index oy = 0; oy < g.ho; ++oy) {
      for (Index ox = 0; ox < g.wo; ++ox) {
        Scalar* row = cols + ((n * g.ho + oy) * g.wo + ox) * patch;
        for (Index ky = 0; ky < g.k; ++ky) {
          const Index iy = oy * g.stride - g.pad + ky;
          for (Index kx = 0; kx < g.k; ++kx) {
            const Index ix = ox * g.stride - g.pad + kx;
            Scalar* dst = row + (ky * g.k + kx) * g.cin;
            if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) {
              std::fill(dst, dst + g.cin, Scalar(0));
            } else {
              const Scalar* src = x + ((n * g.h + iy) * g.w + ix) * g.cin;
              std::copy(src, src + g.cin, dst);
            }
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const Scalar* cols, const ConvGeometry& g, Scalar* dx) {
  const Index patch = g.patch();
  for (Index n = 0; n < g.n; ++n) {
    for (Index oy = 0; oy < g.ho; ++oy) {
      for (Index ox = 0; ox < g.wo; ++ox) {
        const Scalar* row = cols + ((n * g.ho + oy) * g.wo + ox) * patch;
        for (Index ky = 0; ky < g.k; ++ky) {
          const Index iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          for (Index kx = 0; kx < g.k; ++kx) {
            const Index ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= g.w) continue;
            const Scalar* src = row + (ky * g.k + kx) * g.cin;
            Scalar* dst = dx + ((n * g.h + iy) * g.w + ix) * g.cin;
            for (Index c = 0; c < g.cin; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

template <typename Scalar, typename F, typename DF>
Var unary(Tape<Scalar>& tape, Var x, const char* name, F f, DF df) {
  const Tensor<Scalar>& in = tape.value(x);
  Tensor<Scalar> out(in.shape());
  for (Index i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return tape.record(name, std::move(out), {x},
                     [x, df](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(x)) return;
                       const Tensor<Scalar>& in = t.value(x);
                       Tensor<Scalar>& dx = t.grad_buffer(x);
                       for (Index i = 0; i < in.size(); ++i) dx[i] += dy[i] * df(in[i]);
                     });
}

template <typename Scalar>
void accumulate(Tape<Scalar>& t, Var v, const Tensor<Scalar>& g) {
  if (!t.requires_grad(v)) return;
  Tensor<Scalar>& buf = t.grad_buffer(v);
  for (Index i = 0; i < g.size(); ++i) buf[i] += g[i];
}

// Half-pixel source coordinate, clamped to [0, in - 1].
inline void resample_coord(Index dst, Index in, Index out, Index& i0, Index& i1,
                           double& frac) {
  double src = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) /
                   static_cast<double>(out) -
               0.5;
  src = std::clamp(src, 0.0, static_cast<double>(in - 1));
  i0 = static_cast<Index>(std::floor(src));
  i1 = std::min(i0 + 1, in - 1);
  frac = src - static_cast<double>(i0);
}

}  // namespace

template <typename Scalar>
Var conv2d(Tape<Scalar>& tape, Var input, Var kernel, Var bias, Conv2dOptions opt) {
  const Tensor<Scalar>& x = tape.value(input);
  const Tensor<Scalar>& w = tape.value(kernel);
  require(x.rank() == 4, "conv2d", "input must be [N,H,W,Cin], got " + shape_string(x.shape()));
  require(w.rank() == 4, "conv2d", "kernel must be [k,k,Cin,Cout], got " + shape_string(w.shape()));
  require(w.dim(0) == w.dim(1), "conv2d",
          "kernel axes 0/1 differ: " + axis_mismatch("kh", w.dim(0), "kw", w.dim(1)));
  require(w.dim(0) % 2 == 1, "conv2d", "kernel size must be odd, got " + std::to_string(w.dim(0)));
  require(x.dim(3) == w.dim(2), "conv2d",
          "channel axis mismatch: " + axis_mismatch("input.Cin", x.dim(3), "kernel.Cin", w.dim(2)));
  require(opt.stride >= 1 && opt.padding >= 0, "conv2d", "stride must be >= 1 and padding >= 0");

  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(3), 0, 0,
                 opt.stride, opt.padding};
  g.ho = conv_output_size(g.h, g.k, g.stride, g.pad);
  g.wo = conv_output_size(g.w, g.k, g.stride, g.pad);
  require(g.ho >= 1 && g.wo >= 1, "conv2d", "kernel larger than padded input");
  if (bias.valid()) {
    const Tensor<Scalar>& b = tape.value(bias);
    require(b.size() == g.cout, "conv2d",
            "bias length mismatch: " + axis_mismatch("bias", b.size(), "Cout", g.cout));
  }

  Tensor<Scalar> cols;
  if (!g.direct()) {
    cols = Tensor<Scalar>({g.rows(), g.patch()});
    im2col(x.data(), g, cols.data());
  }
  Tensor<Scalar> out({g.n, g.ho, g.wo, g.cout});
  {
    auto y = out.matrix(g.rows(), g.cout);
    auto km = w.matrix(g.patch(), g.cout);
    if (g.direct()) {
      y.noalias() = x.matrix(g.rows(), g.cin) * km;
    } else {
      y.noalias() = cols.matrix(g.rows(), g.patch()) * km;
    }
    if (bias.valid()) {
      y.rowwise() += RowVecMap<Scalar>(tape.value(bias).data(), g.cout);
    }
  }

  return tape.record(
      "conv2d", std::move(out), {input, kernel, bias},
      [input, kernel, bias, g, cols = std::move(cols)](Tape<Scalar>& t,
                                                        const Tensor<Scalar>& dy) {
        auto dym = dy.matrix(g.rows(), g.cout);
        const Tensor<Scalar>& w = t.value(kernel);
        if (t.requires_grad(kernel)) {
          auto dw = t.grad_buffer(kernel).matrix(g.patch(), g.cout);
          if (g.direct()) {
            dw.noalias() += t.value(input).matrix(g.rows(), g.cin).transpose() * dym;
          } else {
            dw.noalias() += cols.matrix(g.rows(), g.patch()).transpose() * dym;
          }
        }
        if (bias.valid() && t.requires_grad(bias)) {
          Tensor<Scalar>& db = t.grad_buffer(bias);
          for (Index r = 0; r < g.rows(); ++r) {
            const Scalar* row = dy.data() + r * g.cout;
            for (Index c = 0; c < g.cout; ++c) db[c] += row[c];
          }
        }
        if (t.requires_grad(input)) {
          Tensor<Scalar>& dx = t.grad_buffer(input);
          if (g.direct()) {
            dx.matrix(g.rows(), g.cin).noalias() +=
                dym * w.matrix(g.patch(), g.cout).transpose();
          } else {
            RowMatrix<Scalar> dcols = dym * w.matrix(g.patch(), g.cout).transpose();
            col2im_add(dcols.data(), g, dx.data());
          }
        }
      });
}

template <typename Scalar>
Var affine(Tape<Scalar>& tape, Var x, Var weights, Var bias) {
  const Tensor<Scalar>& in = tape.value(x);
  const Tensor<Scalar>& w = tape.value(weights);
  require(w.rank() == 2, "affine", "weights must be [Cin,Cout], got " + shape_string(w.shape()));
  const Index cin = w.dim(0), cout = w.dim(1);
  require(in.shape().back() == cin, "affine",
          "last axis mismatch: " + axis_mismatch("input", in.shape().back(), "Cin", cin));
  if (bias.valid()) {
    require(tape.value(bias).size() == cout, "affine",
            "bias length mismatch: " + axis_mismatch("bias", tape.value(bias).size(), "Cout", cout));
  }
  const Index rows = in.size() / cin;
  Shape shape = in.shape();
  shape.back() = cout;
  Tensor<Scalar> out(shape);
  out.matrix(rows, cout).noalias() = in.matrix(rows, cin) * w.matrix();
  if (bias.valid()) {
    out.matrix(rows, cout).rowwise() += RowVecMap<Scalar>(tape.value(bias).data(), cout);
  }
  return tape.record("affine", std::move(out), {x, weights, bias},
                     [x, weights, bias, rows, cin, cout](Tape<Scalar>& t,
                                                          const Tensor<Scalar>& dy) {
                       auto dym = dy.matrix(rows, cout);
                       if (t.requires_grad(weights)) {
                         t.grad_buffer(weights).matrix().noalias() +=
                             t.value(x).matrix(rows, cin).transpose() * dym;
                       }
                       if (bias.valid() && t.requires_grad(bias)) {
                         Tensor<Scalar>& db = t.grad_buffer(bias);
                         for (Index r = 0; r < rows; ++r)
                           for (Index c = 0; c < cout; ++c) db[c] += dy[r * cout + c];
                       }
                       if (t.requires_grad(x)) {
                         t.grad_buffer(x).matrix(rows, cin).noalias() +=
                             dym * t.value(weights).matrix().transpose();
                       }
                     });
}

template <typename Scalar>
Var reduce_mean(Tape<Scalar>& tape, Var x, std::vector<int> axes, bool keepdims) {
  const Tensor<Scalar>& in = tape.value(x);
  const int rank = in.rank();
  require(!axes.empty(), "reduce_mean", "empty reduction axis set");
  std::vector<bool> reduced(static_cast<std::size_t>(rank), false);
  for (int a : axes) {
    if (a < 0) a += rank;
    require(a >= 0 && a < rank, "reduce_mean", "axis out of range for shape " + shape_string(in.shape()));
    require(!reduced[static_cast<std::size_t>(a)], "reduce_mean", "duplicate axis");
    reduced[static_cast<std::size_t>(a)] = true;
  }
  Shape kept_shape;
  Shape out_shape;
  Index count = 1;
  for (int a = 0; a < rank; ++a) {
    const Index d = in.shape()[static_cast<std::size_t>(a)];
    if (reduced[static_cast<std::size_t>(a)]) {
      count *= d;
      kept_shape.push_back(1);
      if (keepdims) out_shape.push_back(1);
    } else {
      kept_shape.push_back(d);
      out_shape.push_back(d);
    }
  }
  if (out_shape.empty()) out_shape.push_back(1);

  // Output flat index for every input element; shared with backward.
  std::vector<Index> out_stride(static_cast<std::size_t>(rank), 0);
  {
    Index s = 1;
    for (int a = rank - 1; a >= 0; --a) {
      const auto ua = static_cast<std::size_t>(a);
      out_stride[ua] = reduced[ua] ? 0 : s;
      s *= kept_shape[ua];
    }
  }
  std::vector<Index> target(static_cast<std::size_t>(in.size()));
  {
    std::vector<Index> idx(static_cast<std::size_t>(rank), 0);
    for (Index i = 0; i < in.size(); ++i) {
      Index o = 0;
      for (int a = 0; a < rank; ++a) o += idx[static_cast<std::size_t>(a)] * out_stride[static_cast<std::size_t>(a)];
      target[static_cast<std::size_t>(i)] = o;
      for (int a = rank - 1; a >= 0; --a) {
        const auto ua = static_cast<std::size_t>(a);
        if (++idx[ua] < in.shape()[ua]) break;
        idx[ua] = 0;
      }
    }
  }
  Tensor<Scalar> out(out_shape, Scalar(0));
  for (Index i = 0; i < in.size(); ++i) out[target[static_cast<std::size_t>(i)]] += in[i];
  const Scalar inv = Scalar(1) / static_cast<Scalar>(count);
  for (Index i = 0; i < out.size(); ++i) out[i] /= static_cast<Scalar>(count);
  return tape.record("reduce_mean", std::move(out), {x},
                     [x, target = std::move(target), inv](Tape<Scalar>& t,
                                                           const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(x)) return;
                       Tensor<Scalar>& dx = t.grad_buffer(x);
                       for (Index i = 0; i < dx.size(); ++i)
                         dx[i] += dy[target[static_cast<std::size_t>(i)]] * inv;
                     });
}

template <typename Scalar>
Var hard_sigmoid(Tape<Scalar>& tape, Var x) {
  return unary(tape, x, "hard_sigmoid", [](Scalar v) { return adahead::hard_sigmoid(v); },
               [](Scalar v) { return hard_sigmoid_grad(v); });
}

template <typename Scalar>
Var shifted_sigmoid(Tape<Scalar>& tape, Var x) {
  return unary(tape, x, "shifted_sigmoid", [](Scalar v) { return adahead::shifted_sigmoid(v); },
               [](Scalar v) { return shifted_sigmoid_grad(v); });
}

template <typename Scalar>
Var sigmoid(Tape<Scalar>& tape, Var x) {
  return unary(tape, x, "sigmoid", [](Scalar v) { return logistic(v); },
               [](Scalar v) {
                 const Scalar s = logistic(v);
                 return s * (Scalar(1) - s);
               });
}

template <typename Scalar>
Var leaky_relu(Tape<Scalar>& tape, Var x, Scalar slope) {
  return unary(tape, x, "leaky_relu", [slope](Scalar v) { return v > Scalar(0) ? v : slope * v; },
               [slope](Scalar v) { return v > Scalar(0) ? Scalar(1) : slope; });
}

template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b) {
  const Tensor<Scalar>& x = tape.value(a);
  const Tensor<Scalar>& y = tape.value(b);
  require(x.shape() == y.shape(), "add", shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  Tensor<Scalar> out(x.shape());
  for (Index i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return tape.record("add", std::move(out), {a, b},
                     [a, b](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       accumulate(t, a, dy);
                       accumulate(t, b, dy);
                     });
}

template <typename Scalar>
Var sub(Tape<Scalar>& tape, Var a, Var b) {
  const Tensor<Scalar>& x = tape.value(a);
  const Tensor<Scalar>& y = tape.value(b);
  require(x.shape() == y.shape(), "sub", shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  Tensor<Scalar> out(x.shape());
  for (Index i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return tape.record("sub", std::move(out), {a, b},
                     [a, b](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       accumulate(t, a, dy);
                       if (t.requires_grad(b)) {
                         Tensor<Scalar>& db = t.grad_buffer(b);
                         for (Index i = 0; i < dy.size(); ++i) db[i] -= dy[i];
                       }
                     });
}

template <typename Scalar>
Var mul(Tape<Scalar>& tape, Var a, Var b) {
  const Tensor<Scalar>& x = tape.value(a);
  const Tensor<Scalar>& y = tape.value(b);
  require(x.shape() == y.shape(), "mul", shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  Tensor<Scalar> out(x.shape());
  for (Index i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return tape.record("mul", std::move(out), {a, b},
                     [a, b](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       const Tensor<Scalar>& x = t.value(a);
                       const Tensor<Scalar>& y = t.value(b);
                       if (t.requires_grad(a)) {
                         Tensor<Scalar>& da = t.grad_buffer(a);
                         for (Index i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i];
                       }
                       if (t.requires_grad(b)) {
                         Tensor<Scalar>& db = t.grad_buffer(b);
                         for (Index i = 0; i < dy.size(); ++i) db[i] += dy[i] * x[i];
                       }
                     });
}

template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var a, Scalar s) {
  return unary(tape, a, "scale", [s](Scalar v) { return v * s; }, [s](Scalar) { return s; });
}

template <typename Scalar>
Var add_constant(Tape<Scalar>& tape, Var a, const Tensor<Scalar>& c) {
  const Tensor<Scalar>& x = tape.value(a);
  require(x.shape() == c.shape(), "add_constant", shape_string(x.shape()) + " vs " + shape_string(c.shape()));
  Tensor<Scalar> out(x.shape());
  for (Index i = 0; i < x.size(); ++i) out[i] = x[i] + c[i];
  return tape.record("add_constant", std::move(out), {a},
                     [a](Tape<Scalar>& t, const Tensor<Scalar>& dy) { accumulate(t, a, dy); });
}

template <typename Scalar>
Var mul_broadcast(Tape<Scalar>& tape, Var x, Var g) {
  const Tensor<Scalar>& in = tape.value(x);
  const Tensor<Scalar>& gate = tape.value(g);
  require(in.rank() == gate.rank(), "mul_broadcast", "rank mismatch");
  const int rank = in.rank();
  std::vector<Index> gstride(static_cast<std::size_t>(rank));
  {
    Index s = 1;
    for (int a = rank - 1; a >= 0; --a) {
      const auto ua = static_cast<std::size_t>(a);
      const Index gd = gate.shape()[ua];
      require(gd == 1 || gd == in.shape()[ua], "mul_broadcast",
              "axis " + std::to_string(a) + ": " + axis_mismatch("x", in.shape()[ua], "g", gd));
      gstride[ua] = gd == 1 ? 0 : s;
      s *= gd;
    }
  }
  std::vector<Index> target(static_cast<std::size_t>(in.size()));
  {
    std::vector<Index> idx(static_cast<std::size_t>(rank), 0);
    for (Index i = 0; i < in.size(); ++i) {
      Index o = 0;
      for (int a = 0; a < rank; ++a) o += idx[static_cast<std::size_t>(a)] * gstride[static_cast<std::size_t>(a)];
      target[static_cast<std::size_t>(i)] = o;
      for (int a = rank - 1; a >= 0; --a) {
        const auto ua = static_cast<std::size_t>(a);
        if (++idx[ua] < in.shape()[ua]) break;
        idx[ua] = 0;
      }
    }
  }
  Tensor<Scalar> out(in.shape());
  for (Index i = 0; i < in.size(); ++i) out[i] = in[i] * gate[target[static_cast<std::size_t>(i)]];
  return tape.record("mul_broadcast", std::move(out), {x, g},
                     [x, g, target = std::move(target)](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       const Tensor<Scalar>& in = t.value(x);
                       const Tensor<Scalar>& gate = t.value(g);
                       if (t.requires_grad(x)) {
                         Tensor<Scalar>& dx = t.grad_buffer(x);
                         for (Index i = 0; i < dy.size(); ++i)
                           dx[i] += dy[i] * gate[target[static_cast<std::size_t>(i)]];
                       }
                       if (t.requires_grad(g)) {
                         Tensor<Scalar>& dg = t.grad_buffer(g);
                         for (Index i = 0; i < dy.size(); ++i)
                           dg[target[static_cast<std::size_t>(i)]] += dy[i] * in[i];
                       }
                     });
}

template <typename Scalar>
Var reshape(Tape<Scalar>& tape, Var x, Shape shape) {
  Tensor<Scalar> out = tape.value(x).reshaped(std::move(shape));
  return tape.record("reshape", std::move(out), {x},
                     [x](Tape<Scalar>& t, const Tensor<Scalar>& dy) { accumulate(t, x, dy); });
}

template <typename Scalar>
Var slice_last(Tape<Scalar>& tape, Var x, Index begin, Index end) {
  const Tensor<Scalar>& in = tape.value(x);
  const Index c = in.shape().back();
  require(0 <= begin && begin < end && end <= c, "slice_last",
          "range [" + std::to_string(begin) + "," + std::to_string(end) + ") of " + std::to_string(c));
  const Index rows = in.size() / c;
  const Index width = end - begin;
  Shape shape = in.shape();
  shape.back() = width;
  Tensor<Scalar> out(shape);
  for (Index r = 0; r < rows; ++r)
    std::copy(in.data() + r * c + begin, in.data() + r * c + end, out.data() + r * width);
  return tape.record("slice_last", std::move(out), {x},
                     [x, rows, c, begin, width](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(x)) return;
                       Tensor<Scalar>& dx = t.grad_buffer(x);
                       for (Index r = 0; r < rows; ++r)
                         for (Index j = 0; j < width; ++j) dx[r * c + begin + j] += dy[r * width + j];
                     });
}

template <typename Scalar>
Var select(Tape<Scalar>& tape, Var x, Index index) {
  const Tensor<Scalar>& in = tape.value(x);
  require(in.rank() >= 2, "select", "needs rank >= 2");
  require(index >= 0 && index < in.dim(0), "select", "index out of range on axis 0");
  Shape shape(in.shape().begin() + 1, in.shape().end());
  const Index block = shape_size(shape);
  std::vector<Scalar> data(in.data() + index * block, in.data() + (index + 1) * block);
  return tape.record("select", Tensor<Scalar>(shape, std::move(data)), {x},
                     [x, index, block](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(x)) return;
                       Tensor<Scalar>& dx = t.grad_buffer(x);
                       for (Index i = 0; i < block; ++i) dx[index * block + i] += dy[i];
                     });
}

template <typename Scalar>
Var stack(Tape<Scalar>& tape, const std::vector<Var>& parts) {
  require(!parts.empty(), "stack", "no inputs");
  const Shape& inner = tape.value(parts.front()).shape();
  Shape shape{static_cast<Index>(parts.size())};
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<Scalar> data;
  data.reserve(static_cast<std::size_t>(shape_size(shape)));
  for (Var p : parts) {
    const Tensor<Scalar>& v = tape.value(p);
    require(v.shape() == inner, "stack", shape_string(v.shape()) + " vs " + shape_string(inner));
    data.insert(data.end(), v.storage().begin(), v.storage().end());
  }
  const Index block = shape_size(inner);
  return tape.record("stack", Tensor<Scalar>(shape, std::move(data)), parts,
                     [parts, block](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       for (std::size_t p = 0; p < parts.size(); ++p) {
                         if (!t.requires_grad(parts[p])) continue;
                         Tensor<Scalar>& dx = t.grad_buffer(parts[p]);
                         const Index off = static_cast<Index>(p) * block;
                         for (Index i = 0; i < block; ++i) dx[i] += dy[off + i];
                       }
                     });
}

template <typename Scalar>
Var concat_rows(Tape<Scalar>& tape, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const Shape& first = tape.value(parts.front()).shape();
  Shape tail(first.begin() + 1, first.end());
  Index rows = 0;
  std::vector<Scalar> data;
  for (Var p : parts) {
    const Tensor<Scalar>& v = tape.value(p);
    require(Shape(v.shape().begin() + 1, v.shape().end()) == tail, "concat_rows",
            "trailing axes differ: " + shape_string(v.shape()) + " vs " + shape_string(first));
    rows += v.dim(0);
    data.insert(data.end(), v.storage().begin(), v.storage().end());
  }
  Shape shape{rows};
  shape.insert(shape.end(), tail.begin(), tail.end());
  return tape.record("concat_rows", Tensor<Scalar>(shape, std::move(data)), parts,
                     [parts](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       Index off = 0;
                       for (Var p : parts) {
                         const Index n = t.value(p).size();
                         if (t.requires_grad(p)) {
                           Tensor<Scalar>& dx = t.grad_buffer(p);
                           for (Index i = 0; i < n; ++i) dx[i] += dy[off + i];
                         }
                         off += n;
                       }
                     });
}

template <typename Scalar>
Var gather_rows(Tape<Scalar>& tape, Var x, const std::vector<Index>& rows) {
  const Tensor<Scalar>& in = tape.value(x);
  require(!rows.empty(), "gather_rows", "empty row set");
  const Index width = in.size() / in.dim(0);
  Shape shape = in.shape();
  shape[0] = static_cast<Index>(rows.size());
  Tensor<Scalar> out(shape);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < in.dim(0), "gather_rows", "row index out of range");
    std::copy(in.data() + rows[r] * width, in.data() + (rows[r] + 1) * width,
              out.data() + static_cast<Index>(r) * width);
  }
  return tape.record("gather_rows", std::move(out), {x},
                     [x, rows, width](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(x)) return;
                       Tensor<Scalar>& dx = t.grad_buffer(x);
                       for (std::size_t r = 0; r < rows.size(); ++r)
                         for (Index j = 0; j < width; ++j)
                           dx[rows[r] * width + j] += dy[static_cast<Index>(r) * width + j];
                     });
}

namespace {

struct ResampleAxis {
  std::vector<Index> i0, i1;
  std::vector<double> frac;
};

ResampleAxis make_axis(Index in, Index out) {
  ResampleAxis a;
  a.i0.resize(static_cast<std::size_t>(out));
  a.i1.resize(static_cast<std::size_t>(out));
  a.frac.resize(static_cast<std::size_t>(out));
  for (Index d = 0; d < out; ++d) {
    const auto u = static_cast<std::size_t>(d);
    resample_coord(d, in, out, a.i0[u], a.i1[u], a.frac[u]);
  }
  return a;
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& x, Index out_h, Index out_w) {
  require(x.rank() == 3, "resize_bilinear", "input must be [H,W,C], got " + shape_string(x.shape()));
  require(out_h >= 1 && out_w >= 1, "resize_bilinear", "target dims must be >= 1");
  const Index h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const ResampleAxis ay = make_axis(h, out_h);
  const ResampleAxis ax = make_axis(w, out_w);
  Tensor<Scalar> out({out_h, out_w, c});
  for (Index oy = 0; oy < out_h; ++oy) {
    const auto uy = static_cast<std::size_t>(oy);
    const Scalar ly = static_cast<Scalar>(ay.frac[uy]);
    for (Index ox = 0; ox < out_w; ++ox) {
      const auto ux = static_cast<std::size_t>(ox);
      const Scalar lx = static_cast<Scalar>(ax.frac[ux]);
      const Scalar* p00 = x.data() + (ay.i0[uy] * w + ax.i0[ux]) * c;
      const Scalar* p01 = x.data() + (ay.i0[uy] * w + ax.i1[ux]) * c;
      const Scalar* p10 = x.data() + (ay.i1[uy] * w + ax.i0[ux]) * c;
      const Scalar* p11 = x.data() + (ay.i1[uy] * w + ax.i1[ux]) * c;
      Scalar* dst = out.data() + (oy * out_w + ox) * c;
      for (Index ch = 0; ch < c; ++ch) {
        const Scalar top = p00[ch] + (p01[ch] - p00[ch]) * lx;
        const Scalar bot = p10[ch] + (p11[ch] - p10[ch]) * lx;
        dst[ch] = top + (bot - top) * ly;
      }
    }
  }
  return out;
}

template <typename Scalar>
Var resize_bilinear(Tape<Scalar>& tape, Var x, Index out_h, Index out_w) {
  const Tensor<Scalar>& in = tape.value(x);
  Tensor<Scalar> out = resize_bilinear(in, out_h, out_w);
  const Index h = in.dim(0), w = in.dim(1), c = in.dim(2);
  return tape.record(
      "resize_bilinear", std::move(out), {x},
      [x, h, w, c, out_h, out_w](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
        if (!t.requires_grad(x)) return;
        const ResampleAxis ay = make_axis(h, out_h);
        const ResampleAxis ax = make_axis(w, out_w);
        Tensor<Scalar>& dx = t.grad_buffer(x);
        for (Index oy = 0; oy < out_h; ++oy) {
          const auto uy = static_cast<std::size_t>(oy);
          const Scalar ly = static_cast<Scalar>(ay.frac[uy]);
          for (Index ox = 0; ox < out_w; ++ox) {
            const auto ux = static_cast<std::size_t>(ox);
            const Scalar lx = static_cast<Scalar>(ax.frac[ux]);
            const Scalar w00 = (1 - ly) * (1 - lx), w01 = (1 - ly) * lx;
            const Scalar w10 = ly * (1 - lx), w11 = ly * lx;
            Scalar* d00 = dx.data() + (ay.i0[uy] * w + ax.i0[ux]) * c;
            Scalar* d01 = dx.data() + (ay.i0[uy] * w + ax.i1[ux]) * c;
            Scalar* d10 = dx.data() + (ay.i1[uy] * w + ax.i0[ux]) * c;
            Scalar* d11 = dx.data() + (ay.i1[uy] * w + ax.i1[ux]) * c;
            const Scalar* g = dy.data() + (oy * out_w + ox) * c;
            for (Index ch = 0; ch < c; ++ch) {
              d00[ch] += g[ch] * w00;
              d01[ch] += g[ch] * w01;
              d10[ch] += g[ch] * w10;
              d11[ch] += g[ch] * w11;
            }
          }
        }
      });
}

template <typename Scalar>
Var standardize(Tape<Scalar>& tape, Var x, Scalar eps) {
  const Tensor<Scalar>& in = tape.value(x);
  const Index n = in.size();
  Scalar mean = 0;
  for (Index i = 0; i < n; ++i) mean += in[i];
  mean /= static_cast<Scalar>(n);
  Scalar var = 0;
  for (Index i = 0; i < n; ++i) var += (in[i] - mean) * (in[i] - mean);
  var /= static_cast<Scalar>(n);
  const Scalar inv_std = Scalar(1) / std::sqrt(var + eps);
  Tensor<Scalar> out(in.shape());
  for (Index i = 0; i < n; ++i) out[i] = (in[i] - mean) * inv_std;
  Tensor<Scalar> y = out;
  return tape.record("standardize", std::move(out), {x},
                     [x, inv_std, y = std::move(y)](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(x)) return;
                       const Index n = dy.size();
                       Scalar mdy = 0, mdyy = 0;
                       for (Index i = 0; i < n; ++i) {
                         mdy += dy[i];
                         mdyy += dy[i] * y[i];
                       }
                       mdy /= static_cast<Scalar>(n);
                       mdyy /= static_cast<Scalar>(n);
                       Tensor<Scalar>& dx = t.grad_buffer(x);
                       for (Index i = 0; i < n; ++i) dx[i] += inv_std * (dy[i] - mdy - y[i] * mdyy);
                     });
}

namespace {

// Bilinear read of channel vector at fractional (y, x) with zero padding.
// Also returns the partial derivatives w.r.t. y and x.
template <typename Scalar>
struct SampleTap {
  Index y0, x0;
  Scalar ly, lx;
  bool valid[4];  // (y0,x0) (y0,x0+1) (y0+1,x0) (y0+1,x0+1)

  SampleTap(Scalar y, Scalar x, Index h, Index w) {
    const Scalar fy = std::floor(y), fx = std::floor(x);
    y0 = static_cast<Index>(fy);
    x0 = static_cast<Index>(fx);
    ly = y - fy;
    lx = x - fx;
    valid[0] = y0 >= 0 && y0 < h && x0 >= 0 && x0 < w;
    valid[1] = y0 >= 0 && y0 < h && x0 + 1 >= 0 && x0 + 1 < w;
    valid[2] = y0 + 1 >= 0 && y0 + 1 < h && x0 >= 0 && x0 < w;
    valid[3] = y0 + 1 >= 0 && y0 + 1 < h && x0 + 1 >= 0 && x0 + 1 < w;
  }
  Scalar weight(int corner) const {
    const Scalar wy = corner < 2 ? 1 - ly : ly;
    const Scalar wx = (corner & 1) ? lx : 1 - lx;
    return wy * wx;
  }
  Index offset(int corner, Index w) const {
    return (y0 + (corner >= 2 ? 1 : 0)) * w + x0 + (corner & 1);
  }
};

}  // namespace

template <typename Scalar>
Var deform_aggregate(Tape<Scalar>& tape, Var features, Var offsets, Var masks, Var weights) {
  const Tensor<Scalar>& f = tape.value(features);
  const Tensor<Scalar>& off = tape.value(offsets);
  const Tensor<Scalar>& m = tape.value(masks);
  const Tensor<Scalar>& wt = tape.value(weights);
  require(f.rank() == 4, "deform_aggregate", "features must be [L,H,W,C], got " + shape_string(f.shape()));
  const Index levels = f.dim(0), h = f.dim(1), w = f.dim(2), c = f.dim(3);
  require(m.rank() == 3 && m.dim(0) == h && m.dim(1) == w, "deform_aggregate",
          "masks must be [H,W,K], got " + shape_string(m.shape()));
  const Index k = m.dim(2);
  if (k <= 0) throw ConfigError("deform_aggregate: K must be positive");
  require(wt.shape() == m.shape(), "deform_aggregate",
          "weights " + shape_string(wt.shape()) + " vs masks " + shape_string(m.shape()));
  require(off.shape() == Shape({h, w, k, 2}), "deform_aggregate",
          "offsets must be [H,W,K,2], got " + shape_string(off.shape()));

  const Scalar inv_l = Scalar(1) / static_cast<Scalar>(levels);
  const Index plane = h * w * c;
  Tensor<Scalar> agg({h, w, c}, Scalar(0));
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < w; ++j) {
      const Index p = i * w + j;
      Scalar* a = agg.data() + p * c;
      for (Index s = 0; s < k; ++s) {
        const Index pk = p * k + s;
        const SampleTap<Scalar> tap(static_cast<Scalar>(i) + off[pk * 2],
                                    static_cast<Scalar>(j) + off[pk * 2 + 1], h, w);
        const Scalar coef = wt[pk] * m[pk] * inv_l;
        for (Index l = 0; l < levels; ++l) {
          for (int corner = 0; corner < 4; ++corner) {
            if (!tap.valid[corner]) continue;
            const Scalar cw = coef * tap.weight(corner);
            const Scalar* src = f.data() + l * plane + tap.offset(corner, w) * c;
            for (Index ch = 0; ch < c; ++ch) a[ch] += cw * src[ch];
          }
        }
      }
    }
  }
  Tensor<Scalar> out(f.shape());
  for (Index l = 0; l < levels; ++l) std::copy(agg.data(), agg.data() + plane, out.data() + l * plane);

  return tape.record(
      "deform_aggregate", std::move(out), {features, offsets, masks, weights},
      [features, offsets, masks, weights, levels, h, w, c, k, inv_l, plane](
          Tape<Scalar>& t, const Tensor<Scalar>& dy) {
        const Tensor<Scalar>& f = t.value(features);
        const Tensor<Scalar>& off = t.value(offsets);
        const Tensor<Scalar>& m = t.value(masks);
        const Tensor<Scalar>& wt = t.value(weights);
        Tensor<Scalar> g({h, w, c}, Scalar(0));
        for (Index l = 0; l < levels; ++l)
          for (Index i = 0; i < plane; ++i) g[i] += dy[l * plane + i];

        const bool need_f = t.requires_grad(features);
        const bool need_off = t.requires_grad(offsets);
        const bool need_m = t.requires_grad(masks);
        const bool need_w = t.requires_grad(weights);
        Tensor<Scalar>* df = need_f ? &t.grad_buffer(features) : nullptr;
        Tensor<Scalar>* doff = need_off ? &t.grad_buffer(offsets) : nullptr;
        Tensor<Scalar>* dm = need_m ? &t.grad_buffer(masks) : nullptr;
        Tensor<Scalar>* dw = need_w ? &t.grad_buffer(weights) : nullptr;

        std::vector<Scalar> sample(static_cast<std::size_t>(c));
        for (Index i = 0; i < h; ++i) {
          for (Index j = 0; j < w; ++j) {
            const Index p = i * w + j;
            const Scalar* gp = g.data() + p * c;
            for (Index s = 0; s < k; ++s) {
              const Index pk = p * k + s;
              const SampleTap<Scalar> tap(static_cast<Scalar>(i) + off[pk * 2],
                                          static_cast<Scalar>(j) + off[pk * 2 + 1], h, w);
              const Scalar wm = wt[pk] * m[pk];
              if (need_f) {
                const Scalar coef = wm * inv_l;
                for (Index l = 0; l < levels; ++l) {
                  for (int corner = 0; corner < 4; ++corner) {
                    if (!tap.valid[corner]) continue;
                    const Scalar cw = coef * tap.weight(corner);
                    Scalar* dst = df->data() + l * plane + tap.offset(corner, w) * c;
                    for (Index ch = 0; ch < c; ++ch) dst[ch] += cw * gp[ch];
                  }
                }
              }
              if (!(need_off || need_m || need_w)) continue;
              // Level-averaged sample S and its spatial derivatives, contracted with g.
              Scalar gs = 0, gdy = 0, gdx = 0;
              for (Index l = 0; l < levels; ++l) {
                const Scalar* base = f.data() + l * plane;
                for (Index ch = 0; ch < c; ++ch) {
                  Scalar v[4];
                  for (int corner = 0; corner < 4; ++corner)
                    v[corner] = tap.valid[corner] ? base[tap.offset(corner, w) * c + ch] : Scalar(0);
                  const Scalar val = tap.weight(0) * v[0] + tap.weight(1) * v[1] +
                                     tap.weight(2) * v[2] + tap.weight(3) * v[3];
                  const Scalar d_y = (1 - tap.lx) * (v[2] - v[0]) + tap.lx * (v[3] - v[1]);
                  const Scalar d_x = (1 - tap.ly) * (v[1] - v[0]) + tap.ly * (v[3] - v[2]);
                  gs += gp[ch] * val;
                  gdy += gp[ch] * d_y;
                  gdx += gp[ch] * d_x;
                }
              }
              gs *= inv_l;
              gdy *= inv_l;
              gdx *= inv_l;
              if (need_w) (*dw)[pk] += m[pk] * gs;
              if (need_m) (*dm)[pk] += wt[pk] * gs;
              if (need_off) {
                (*doff)[pk * 2] += wm * gdy;
                (*doff)[pk * 2 + 1] += wm * gdx;
              }
            }
          }
        }
      });
}

template <typename Scalar>
Var dynamic_relu(Tape<Scalar>& tape, Var x, Var theta) {
  const Tensor<Scalar>& in = tape.value(x);
  const Tensor<Scalar>& th = tape.value(theta);
  const Index c = in.shape().back();
  require(th.shape() == Shape({c, 4}), "dynamic_relu",
          "theta must be [C,4] with C=" + std::to_string(c) + ", got " + shape_string(th.shape()));
  const Index rows = in.size() / c;
  Tensor<Scalar> out(in.shape());
  for (Index r = 0; r < rows; ++r) {
    for (Index ch = 0; ch < c; ++ch) {
      const Scalar v = in[r * c + ch];
      const Scalar* q = th.data() + ch * 4;
      out[r * c + ch] = std::max(v * q[0] + q[2], v * q[1] + q[3]);
    }
  }
  return tape.record("dynamic_relu", std::move(out), {x, theta},
                     [x, theta, rows, c](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       const Tensor<Scalar>& in = t.value(x);
                       const Tensor<Scalar>& th = t.value(theta);
                       Tensor<Scalar>* dx = t.requires_grad(x) ? &t.grad_buffer(x) : nullptr;
                       Tensor<Scalar>* dth = t.requires_grad(theta) ? &t.grad_buffer(theta) : nullptr;
                       for (Index r = 0; r < rows; ++r) {
                         for (Index ch = 0; ch < c; ++ch) {
                           const Index i = r * c + ch;
                           const Scalar v = in[i];
                           const Scalar* q = th.data() + ch * 4;
                           const int b = (v * q[0] + q[2] >= v * q[1] + q[3]) ? 0 : 1;
                           if (dx) (*dx)[i] += dy[i] * q[b];
                           if (dth) {
                             (*dth)[ch * 4 + b] += dy[i] * v;
                             (*dth)[ch * 4 + 2 + b] += dy[i];
                           }
                         }
                       }
                     });
}

template <typename Scalar>
Var weighted_sum(Tape<Scalar>& tape, const std::vector<Var>& parts,
                 const std::vector<Scalar>& weights) {
  require(parts.size() == weights.size(), "weighted_sum", "parts/weights length mismatch");
  Scalar total = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) total += weights[i] * tape.value(parts[i]).item();
  return tape.record("weighted_sum", Tensor<Scalar>::scalar(total), parts,
                     [parts, weights](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       for (std::size_t i = 0; i < parts.size(); ++i) {
                         if (t.requires_grad(parts[i])) t.grad_buffer(parts[i])[0] += dy[0] * weights[i];
                       }
                     });
}

template <typename Scalar>
Var sum_all(Tape<Scalar>& tape, Var x, Scalar factor) {
  const Tensor<Scalar>& in = tape.value(x);
  Scalar s = 0;
  for (Index i = 0; i < in.size(); ++i) s += in[i];
  return tape.record("sum_all", Tensor<Scalar>::scalar(s * factor), {x},
                     [x, factor](Tape<Scalar>& t, const Tensor<Scalar>& dy) {
                       if (!t.requires_grad(x)) return;
                       Tensor<Scalar>& dx = t.grad_buffer(x);
                       for (Index i = 0; i < dx.size(); ++i) dx[i] += dy[0] * factor;
                     });
}

#define ADAHEAD_INSTANTIATE_OPS(S)                                                  \
  template Var conv2d(Tape<S>&, Var, Var, Var, Conv2dOptions);                    \
  template Var affine(Tape<S>&, Var, Var, Var);                                   \
  template Var reduce_mean(Tape<S>&, Var, std::vector<int>, bool);                \
  template Var hard_sigmoid(Tape<S>&, Var);                                       \
  template Var shifted_sigmoid(Tape<S>&, Var);                                    \
  template Var sigmoid(Tape<S>&, Var);                                            \
  template Var leaky_relu(Tape<S>&, Var, S);                                      \
  template Var add(Tape<S>&, Var, Var);                                           \
  template Var sub(Tape<S>&, Var, Var);                                           \
  template Var mul(Tape<S>&, Var, Var);                                           \
  template Var scale(Tape<S>&, Var, S);                                           \
  template Var add_constant(Tape<S>&, Var, const Tensor<S>&);                     \
  template Var mul_broadcast(Tape<S>&, Var, Var);                                 \
  template Var reshape(Tape<S>&, Var, Shape);                                     \
  template Var slice_last(Tape<S>&, Var, Index, Index);                           \
  template Var select(Tape<S>&, Var, Index);                                      \
  template Var stack(Tape<S>&, const std::vector<Var>&);                          \
  template Var concat_rows(Tape<S>&, const std::vector<Var>&);                    \
  template Var gather_rows(Tape<S>&, Var, const std::vector<Index>&);             \
  template Var resize_bilinear(Tape<S>&, Var, Index, Index);                      \
  template Tensor<S> resize_bilinear(const Tensor<S>&, Index, Index);             \
  template Var standardize(Tape<S>&, Var, S);                                     \
  template Var deform_aggregate(Tape<S>&, Var, Var, Var, Var);                    \
  template Var dynamic_relu(Tape<S>&, Var, Var);                                  \
  template Var weighted_sum(Tape<S>&, const std::vector<Var>&, const std::vector<S>&); \
  template Var sum_all(Tape<S>&, Var, S);

ADAHEAD_INSTANTIATE_OPS(float)
ADAHEAD_INSTANTIATE_OPS(double)

}  // namespace adahead
