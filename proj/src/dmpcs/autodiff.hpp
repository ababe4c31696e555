// Copyright 2026 The dmpcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dmpcs/tensor.hpp"

namespace dmpcs::ad {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

using Gradients = std::map<std::string, Tensor>;

/// Reverse-mode tape. Nodes are appended in evaluation order, so the tape is
/// a topological order by construction; backward() walks it once in reverse.
class Graph {
 public:
  /// Accumulates the node's output gradient into the gradients of its
  /// inputs. grads[i] is null when input i does not need a gradient.
  using BackwardFn = std::function<void(const Tensor& grad_out,
                                        std::span<const Tensor* const> inputs,
                                        std::span<Tensor* const> grads)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Named leaf. Adding the same name twice returns the existing node.
  Var parameter(const std::string& name, const Tensor& value, bool requires_grad = true);
  Var record(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  const char* op_name(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradients of a one-element loss for every named leaf that requires one.
  Gradients backward(Var loss);

 private:
  struct Node {
    const char* op = "leaf";
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::string name;
    bool requires_grad = false;
  };

  std::size_t check_owned(Var v) const;

  std::deque<Node> nodes_;
  std::unordered_map<std::string, std::size_t> params_;
};

// Elementwise arithmetic on equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// a * s where s holds one element.
Var mul_scalar(Var a, Var s);
Var exp(Var a);
Var relu(Var a);

/// Mean of squared differences; one-element result.
Var mse(Var a, Var b);

/// 3x3 convolution, stride 1, zero padding 1. x [Cin,H,W], w [Cout,Cin,3,3], b [Cout].
Var conv2d(Var x, Var w, Var b);

/// W [R,C] times v [C].
Var matvec(Var w, Var v);

/// Stack [C_i,H,W] inputs along the channel axis.
Var concat_channels(const std::vector<Var>& parts);
/// Channels [begin, begin+count) of x [C,H,W].
Var slice_channels(Var x, std::size_t begin, std::size_t count);

/// Per-block Phi x for an image [1,H,W] tiled into B x B blocks; returns [blocks, M].
Var block_sense(Var image, Var phi, std::size_t block);
/// Per-block Phi^T y reassembled into an image [1,H,W].
Var block_adjoint(Var y, Var phi, std::size_t block, std::size_t height, std::size_t width);

namespace kernels {
void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& out);
void conv2d_backward_input(const Tensor& grad_out, const Tensor& w, Tensor& grad_x);
void conv2d_backward_weight(const Tensor& grad_out, const Tensor& x, Tensor& grad_w,
                            Tensor& grad_b);
}  // namespace kernels

}  // namespace dmpcs::ad
