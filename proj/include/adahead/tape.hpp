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

#ifndef ADAHEAD_TAPE_HPP_
#define ADAHEAD_TAPE_HPP_

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adahead/tensor.hpp"

namespace adahead {

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode gradient tape. Nodes are appended in evaluation order and the
// reverse sweep visits them in exactly the opposite order. Gradients
// accumulate additively. A tape is owned by a single thread.
template <typename Scalar>
class Tape {
 public:
  using TensorT = Tensor<Scalar>;
  using Backward = std::function<void(Tape&, const TensorT&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(TensorT value) { return push("constant", std::move(value), false, {}); }
  Var variable(TensorT value) { return push("variable", std::move(value), true, {}); }

  // Appends an op result. `backward` receives the gradient w.r.t. the result
  // and must accumulate into the inputs' buffers via grad_buffer().
  Var record(std::string_view op, TensorT value, std::initializer_list<Var> inputs,
             Backward backward) {
    return record(op, std::move(value), std::vector<Var>(inputs), std::move(backward));
  }

  Var record(std::string_view op, TensorT value, const std::vector<Var>& inputs,
             Backward backward) {
    if (check_finite_ && !value.all_finite()) {
      throw NumericError("non-finite value produced", std::string(op));
    }
    bool needs = false;
    for (Var v : inputs) needs = needs || (v.valid() && nodes_[idx(v)].requires_grad);
    needs = needs && grad_enabled_;
    Var out = push(op, std::move(value), needs, needs ? std::move(backward) : Backward{});
    if (needs) nodes_[idx(out)].inputs = inputs;
    return out;
  }

  const TensorT& value(Var v) const { return nodes_[idx(v)].value; }
  const std::string& op_name(Var v) const { return nodes_[idx(v)].op; }
  bool requires_grad(Var v) const { return v.valid() && nodes_[idx(v)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient after backward(); zeros if nothing flowed into v.
  TensorT grad(Var v) const {
    const Node& n = nodes_[idx(v)];
    if (n.grad) return *n.grad;
    return TensorT(n.value.shape(), Scalar(0));
  }

  TensorT& grad_buffer(Var v) {
    Node& n = nodes_[idx(v)];
    if (!n.grad) n.grad.emplace(n.value.shape(), Scalar(0));
    return *n.grad;
  }

  void set_grad_enabled(bool on) { grad_enabled_ = on; }
  void set_check_finite(bool on) { check_finite_ = on; }

  // Seeds d(root)/d(root) = 1 and sweeps in reverse recording order.
  void backward(Var root) {
    if (value(root).size() != 1) {
      throw DimensionError("backward() root must be a scalar, got " +
                           shape_string(value(root).shape()));
    }
    grad_buffer(root)[0] += Scalar(1);
    for (int i = idx(root); i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.backward || !n.grad) continue;
      n.backward(*this, *n.grad);
      if (check_finite_) {
        for (Var in : n.inputs) {
          if (!in.valid()) continue;
          const Node& m = nodes_[idx(in)];
          if (m.grad && !m.grad->all_finite()) {
            throw NumericError("non-finite gradient", n.op);
          }
        }
      }
    }
  }

 private:
  struct Node {
    std::string op;
    TensorT value;
    bool requires_grad = false;
    Backward backward;
    std::optional<TensorT> grad;
    std::vector<Var> inputs;
  };

  static std::size_t idx(Var v) { return static_cast<std::size_t>(v.id); }

  Var push(std::string_view op, TensorT value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::string(op), std::move(value), requires_grad,
                          std::move(backward), std::nullopt, {}});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::deque<Node> nodes_;  // stable references across push_back
  bool grad_enabled_ = true;
  bool check_finite_ = true;
};

}  // namespace adahead

#endif  // ADAHEAD_TAPE_HPP_
