#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace isp::ad {

using Shape = std::vector<std::size_t>;

class Tape;

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Dense row-major array of doubles. Copies share storage; mutation goes through
// mutable_data(), which detaches shared storage first. A tensor produced by an
// operation on traced inputs carries the node id of its tape entry.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return data_->size(); }

  std::span<const double> data() const { return *data_; }
  std::span<double> mutable_data();

  double operator[](std::size_t flat) const { return (*data_)[flat]; }
  double at(std::initializer_list<std::size_t> index) const;
  double item() const;

  bool traced() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  // Same values, no tape handle.
  Tensor detached() const;

  std::shared_ptr<const std::vector<double>> storage() const { return data_; }

 private:
  friend class Tape;

  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Bit-exact comparison of shape and contents.
bool identical(const Tensor& a, const Tensor& b);

}  // namespace isp::ad
