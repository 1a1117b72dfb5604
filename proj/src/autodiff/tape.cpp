#include "isp/autodiff/tape.hpp"

#include <stdexcept>

namespace isp::ad {

std::string_view primitive_name(Primitive op) {
  switch (op) {
    case Primitive::Leaf: return "leaf";
    case Primitive::MatMul: return "matmul";
    case Primitive::Add: return "add";
    case Primitive::Sub: return "sub";
    case Primitive::Mul: return "mul";
    case Primitive::Div: return "div";
    case Primitive::Outer: return "outer";
    case Primitive::Concat: return "concat";
    case Primitive::Slice: return "slice";
    case Primitive::Mean: return "mean";
    case Primitive::Sum: return "sum";
    case Primitive::Softmax: return "softmax";
    case Primitive::Tanh: return "tanh";
    case Primitive::Relu: return "relu";
    case Primitive::Softplus: return "softplus";
    case Primitive::Sigmoid: return "sigmoid";
    case Primitive::Exp: return "exp";
    case Primitive::Log: return "log";
    case Primitive::Scale: return "scale";
    case Primitive::AddScalar: return "add_scalar";
    case Primitive::Gather: return "gather";
    case Primitive::Reshape: return "reshape";
    case Primitive::Transpose: return "transpose";
  }
  return "unknown";
}

std::optional<Tensor> Gradients::of(const Tensor& t) const {
  if (!t.traced()) return std::nullopt;
  auto it = grads_.find(t.node());
  if (it == grads_.end()) return std::nullopt;
  return it->second;
}

bool Gradients::contains(const Tensor& t) const { return t.traced() && grads_.count(t.node()) > 0; }

Tensor Tape::watch(const Tensor& t) {
  if (t.traced()) throw std::logic_error("tensor is already traced");
  Tensor out = t;
  out.tape_ = this;
  out.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{Primitive::Leaf, {}, t.shape(), {}});
  return out;
}

Tensor Tape::record(Primitive op, Tensor value, std::span<const Tensor* const> inputs, BackwardFn backward) {
  Node node{op, {}, value.shape(), std::move(backward)};
  node.inputs.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    if (in->traced() && in->tape() != this) throw std::logic_error("inputs recorded on different tapes");
    node.inputs.push_back(in->traced() ? in->node() : -1);
  }
  value.tape_ = this;
  value.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  return value;
}

Gradients Tape::backprop(const Tensor& root) const {
  if (!root.traced() || root.tape() != this) throw std::invalid_argument("backprop root is not traced on this tape");
  if (root.numel() != 1) throw ShapeError("backprop root must be scalar, got " + shape_str(root.shape()));

  const auto n = static_cast<std::size_t>(root.node()) + 1;
  std::vector<std::vector<double>> grads(n);
  grads[n - 1].assign(1, 1.0);

  std::vector<std::span<double>> grad_in;
  for (std::size_t k = n; k-- > 0;) {
    if (grads[k].empty()) continue;
    const Node& node = nodes_[k];
    if (node.op == Primitive::Leaf) continue;
    grad_in.clear();
    for (int in : node.inputs) {
      if (in < 0) {
        grad_in.emplace_back();
        continue;
      }
      auto& g = grads[static_cast<std::size_t>(in)];
      if (g.empty()) g.assign(numel_of(nodes_[static_cast<std::size_t>(in)].shape), 0.0);
      grad_in.emplace_back(g);
    }
    node.backward(grads[k], grad_in);
  }

  Gradients out;
  for (std::size_t k = 0; k < n; ++k) {
    if (grads[k].empty()) continue;
    out.grads_.emplace(static_cast<int>(k), Tensor(nodes_[k].shape, std::move(grads[k])));
  }
  return out;
}

std::vector<int> Tape::reachable_leaves(const Tensor& root) const {
  if (!root.traced() || root.tape() != this) return {};
  std::vector<char> seen(static_cast<std::size_t>(root.node()) + 1, 0);
  seen.back() = 1;
  std::vector<int> leaves;
  for (std::size_t k = seen.size(); k-- > 0;) {
    if (!seen[k]) continue;
    if (nodes_[k].op == Primitive::Leaf) leaves.push_back(static_cast<int>(k));
    for (int in : nodes_[k].inputs) {
      if (in >= 0) seen[static_cast<std::size_t>(in)] = 1;
    }
  }
  return leaves;
}

Tape* common_tape(std::span<const Tensor* const> inputs) {
  Tape* tape = nullptr;
  for (const Tensor* in : inputs) {
    if (!in->traced()) continue;
    if (tape && in->tape() != tape) throw std::logic_error("inputs recorded on different tapes");
    tape = in->tape();
  }
  return tape;
}

}  // namespace isp::ad
