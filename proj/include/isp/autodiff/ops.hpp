#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "isp/autodiff/tape.hpp"
#include "isp/autodiff/tensor.hpp"

// Forward primitives. Each records a tape node when any input is traced.
namespace isp::ad {

// (m,k)x(k,n) -> (m,n); (m,k)x(k) -> (m); (k)x(k,n) -> (n).
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise with numpy-style right-aligned broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor outer(const Tensor& a, const Tensor& b);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& t, std::size_t axis, std::size_t begin, std::size_t end);
std::vector<Tensor> split(const Tensor& t, std::size_t axis, std::span<const std::size_t> sizes);

Tensor sum(const Tensor& t);
Tensor mean(const Tensor& t);
Tensor sum(const Tensor& t, std::size_t axis);
Tensor mean(const Tensor& t, std::size_t axis);

Tensor softmax(const Tensor& t, std::size_t axis);

Tensor tanh(const Tensor& t);
Tensor relu(const Tensor& t);
Tensor softplus(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor exp(const Tensor& t);
// Throws DomainError for any non-positive entry.
Tensor log(const Tensor& t);

Tensor scale(const Tensor& t, double factor);
Tensor add_scalar(const Tensor& t, double offset);

// Flat-index gather: result[i] = t.flat[indices[i]].
Tensor gather(const Tensor& t, std::span<const std::size_t> indices);

Tensor reshape(const Tensor& t, Shape shape);
Tensor transpose(const Tensor& t);

Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace isp::ad
