#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "isp/autodiff/tensor.hpp"

namespace isp::ad {

// Closed set of differentiable primitives. Every composite layer is built
// from these, so a single gradient check covers the whole model.
enum class Primitive {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,
  Div,
  Outer,
  Concat,
  Slice,
  Mean,
  Sum,
  Softmax,
  Tanh,
  Relu,
  Softplus,
  Sigmoid,
  Exp,
  Log,
  Scale,
  AddScalar,
  Gather,
  Reshape,
  Transpose,
};

std::string_view primitive_name(Primitive op);

// Accumulates d(root)/d(input) for every traced input. Untraced inputs get an
// empty span.
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<const std::span<double>> grad_in)>;

class Gradients {
 public:
  std::optional<Tensor> of(const Tensor& t) const;
  bool contains(const Tensor& t) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::map<int, Tensor> grads_;
};

// Append-only record of traced operations. Single owner; tensors that refer to
// a tape must not outlive it.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a leaf (typically a parameter) and returns a traced handle.
  Tensor watch(const Tensor& t);

  Tensor record(Primitive op, Tensor value, std::span<const Tensor* const> inputs, BackwardFn backward);

  Gradients backprop(const Tensor& root) const;

  std::size_t size() const { return nodes_.size(); }
  Primitive op(int node) const { return nodes_.at(static_cast<std::size_t>(node)).op; }
  const std::vector<int>& inputs(int node) const { return nodes_.at(static_cast<std::size_t>(node)).inputs; }

  // Leaves that the root depends on.
  std::vector<int> reachable_leaves(const Tensor& root) const;

 private:
  struct Node {
    Primitive op;
    std::vector<int> inputs;
    Shape shape;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Returns the tape shared by the traced inputs, or nullptr when none is traced.
Tape* common_tape(std::span<const Tensor* const> inputs);

}  // namespace isp::ad
