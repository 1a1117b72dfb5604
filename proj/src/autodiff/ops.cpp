#include "isp/autodiff/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace isp::ad {
namespace {

using Offsets = std::shared_ptr<const std::vector<std::size_t>>;

[[noreturn]] void shape_fail(std::string_view op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

Tensor finish(Primitive op, Tensor value, std::initializer_list<const Tensor*> inputs, BackwardFn backward) {
  std::span<const Tensor* const> ins(inputs.begin(), inputs.size());
  Tape* tape = common_tape(ins);
  if (!tape) return value;
  return tape->record(op, std::move(value), ins, std::move(backward));
}

Tensor finish_many(Primitive op, Tensor value, const std::vector<const Tensor*>& inputs, BackwardFn backward) {
  Tape* tape = common_tape(inputs);
  if (!tape) return value;
  return tape->record(op, std::move(value), inputs, std::move(backward));
}

// Offsets of `in` for every element of `out` under right-aligned broadcasting.
// Returns nullptr when shapes are equal (identity mapping).
Offsets broadcast_offsets(const Shape& out, const Shape& in) {
  if (out == in) return nullptr;
  const std::size_t r = out.size();
  std::vector<std::size_t> stride(r, 0);
  std::size_t s = 1;
  for (std::size_t k = in.size(); k-- > 0;) {
    std::size_t ok = r - in.size() + k;
    stride[ok] = in[k] == 1 ? 0 : s;
    s *= in[k];
  }
  const std::size_t n = numel_of(out);
  auto offsets = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> idx(r, 0);
  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (*offsets)[i] = off;
    for (std::size_t k = r; k-- > 0;) {
      ++idx[k];
      off += stride[k];
      if (idx[k] < out[k]) break;
      off -= stride[k] * idx[k];
      idx[k] = 0;
    }
  }
  return offsets;
}

inline std::size_t at(const Offsets& o, std::size_t i) { return o ? (*o)[i] : i; }

template <class Fwd, class GradA, class GradB>
Tensor binary(Primitive op, const Tensor& a, const Tensor& b, Fwd fwd, GradA grad_a, GradB grad_b) {
  Shape out_shape = broadcast_shape(a.shape(), b.shape());
  Offsets oa = broadcast_offsets(out_shape, a.shape());
  Offsets ob = broadcast_offsets(out_shape, b.shape());
  const std::size_t n = numel_of(out_shape);
  std::vector<double> out(n);
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(da[at(oa, i)], db[at(ob, i)]);
  auto sa = a.storage();
  auto sb = b.storage();
  return finish(op, Tensor(out_shape, std::move(out)), {&a, &b},
                [sa, sb, oa, ob, n, grad_a, grad_b](std::span<const double> g, std::span<const std::span<double>> gin) {
                  const auto& va = *sa;
                  const auto& vb = *sb;
                  if (!gin[0].empty()) {
                    for (std::size_t i = 0; i < n; ++i) {
                      auto ia = at(oa, i);
                      gin[0][ia] += grad_a(va[ia], vb[at(ob, i)], g[i]);
                    }
                  }
                  if (!gin[1].empty()) {
                    for (std::size_t i = 0; i < n; ++i) {
                      auto ib = at(ob, i);
                      gin[1][ib] += grad_b(va[at(oa, i)], vb[ib], g[i]);
                    }
                  }
                });
}

// y = f(x); dy/dx expressed through (x, y).
template <class Fwd, class Deriv>
Tensor unary(Primitive op, const Tensor& t, Fwd fwd, Deriv deriv) {
  const std::size_t n = t.numel();
  std::vector<double> out(n);
  auto dt = t.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(dt[i]);
  Tensor value(t.shape(), std::move(out));
  auto sx = t.storage();
  auto sy = value.storage();
  return finish(op, value, {&t}, [sx, sy, deriv](std::span<const double> g, std::span<const std::span<double>> gin) {
    if (gin[0].empty()) return;
    const auto& x = *sx;
    const auto& y = *sy;
    for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * deriv(x[i], y[i]);
  });
}

struct AxisView {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis, std::string_view op) {
  if (axis >= s.size()) shape_fail(op, "axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  AxisView v;
  for (std::size_t k = 0; k < axis; ++k) v.outer *= s[k];
  v.len = s[axis];
  for (std::size_t k = axis + 1; k < s.size(); ++k) v.inner *= s[k];
  return v;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k != axis) out.push_back(s[k]);
  }
  return out;
}

Tensor reduce_axis(Primitive op, const Tensor& t, std::size_t axis, double factor) {
  auto v = axis_view(t.shape(), axis, primitive_name(op));
  std::vector<double> out(v.outer * v.inner, 0.0);
  auto d = t.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t l = 0; l < v.len; ++l) {
      const double* row = d.data() + (o * v.len + l) * v.inner;
      double* dst = out.data() + o * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) dst[i] += row[i];
    }
  }
  if (factor != 1.0) {
    for (auto& x : out) x *= factor;
  }
  return finish(op, Tensor(drop_axis(t.shape(), axis), std::move(out)), {&t},
                [v, factor](std::span<const double> g, std::span<const std::span<double>> gin) {
                  if (gin[0].empty()) return;
                  for (std::size_t o = 0; o < v.outer; ++o) {
                    for (std::size_t l = 0; l < v.len; ++l) {
                      double* dst = gin[0].data() + (o * v.len + l) * v.inner;
                      const double* src = g.data() + o * v.inner;
                      for (std::size_t i = 0; i < v.inner; ++i) dst[i] += factor * src[i];
                    }
                  }
                });
}

Tensor reduce_all(Primitive op, const Tensor& t, double factor) {
  double acc = 0.0;
  for (double x : t.data()) acc += x;
  return finish(op, Tensor::scalar(acc * factor), {&t},
                [factor](std::span<const double> g, std::span<const std::span<double>> gin) {
                  if (gin[0].empty()) return;
                  for (auto& x : gin[0]) x += factor * g[0];
                });
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t k = 0; k < r; ++k) {
    std::size_t da = k < r - a.size() ? 1 : a[k - (r - a.size())];
    std::size_t db = k < r - b.size() ? 1 : b[k - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("broadcast: incompatible shapes " + shape_str(a) + " and " + shape_str(b));
    }
    out[k] = std::max(da, db);
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 1 || a.rank() > 2 || b.rank() < 1 || b.rank() > 2 || (a.rank() == 1 && b.rank() == 1)) {
    shape_fail("matmul", "unsupported ranks " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.rank() == 2 ? a.dim(0) : 1;
  const std::size_t k = a.rank() == 2 ? a.dim(1) : a.dim(0);
  const std::size_t kb = b.dim(0);
  const std::size_t n = b.rank() == 2 ? b.dim(1) : 1;
  if (k != kb) shape_fail("matmul", "inner extents differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));

  std::vector<double> out(m * n, 0.0);
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = da[i * k + p];
      if (av == 0.0) continue;
      const double* brow = db.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  Shape out_shape;
  if (a.rank() == 2) out_shape.push_back(m);
  if (b.rank() == 2) out_shape.push_back(n);
  auto sa = a.storage();
  auto sb = b.storage();
  return finish(Primitive::MatMul, Tensor(out_shape, std::move(out)), {&a, &b},
                [sa, sb, m, k, n](std::span<const double> g, std::span<const std::span<double>> gin) {
                  const auto& va = *sa;
                  const auto& vb = *sb;
                  if (!gin[0].empty()) {
                    // dA = G B^T
                    for (std::size_t i = 0; i < m; ++i) {
                      const double* grow = g.data() + i * n;
                      for (std::size_t p = 0; p < k; ++p) {
                        const double* brow = vb.data() + p * n;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        gin[0][i * k + p] += acc;
                      }
                    }
                  }
                  if (!gin[1].empty()) {
                    // dB = A^T G
                    for (std::size_t i = 0; i < m; ++i) {
                      const double* grow = g.data() + i * n;
                      for (std::size_t p = 0; p < k; ++p) {
                        const double av = va[i * k + p];
                        if (av == 0.0) continue;
                        double* dst = gin[1].data() + p * n;
                        for (std::size_t j = 0; j < n; ++j) dst[j] += av * grow[j];
                      }
                    }
                  }
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      Primitive::Add, a, b, [](double x, double y) { return x + y; }, [](double, double, double g) { return g; },
      [](double, double, double g) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      Primitive::Sub, a, b, [](double x, double y) { return x - y; }, [](double, double, double g) { return g; },
      [](double, double, double g) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      Primitive::Mul, a, b, [](double x, double y) { return x * y; }, [](double, double y, double g) { return g * y; },
      [](double x, double, double g) { return g * x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double y : b.data()) {
    if (y == 0.0) throw DomainError("div: division by zero");
  }
  return binary(
      Primitive::Div, a, b, [](double x, double y) { return x / y; }, [](double, double y, double g) { return g / y; },
      [](double x, double y, double g) { return -g * x / (y * y); });
}

Tensor outer(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) {
    shape_fail("outer", "expects vectors, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t m = a.numel();
  const std::size_t n = b.numel();
  std::vector<double> out(m * n);
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = da[i] * db[j];
  }
  auto sa = a.storage();
  auto sb = b.storage();
  return finish(Primitive::Outer, Tensor({m, n}, std::move(out)), {&a, &b},
                [sa, sb, m, n](std::span<const double> g, std::span<const std::span<double>> gin) {
                  const auto& va = *sa;
                  const auto& vb = *sb;
                  for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                      const double gij = g[i * n + j];
                      if (!gin[0].empty()) gin[0][i] += gij * vb[j];
                      if (!gin[1].empty()) gin[1][j] += gij * va[i];
                    }
                  }
                });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) shape_fail("concat", "no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) shape_fail("concat", "axis out of range for " + shape_str(first));
  std::vector<std::size_t> lens;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t k = 0; ok && k < s.size(); ++k) ok = k == axis || s[k] == first[k];
    if (!ok) shape_fail("concat", "mismatched shapes " + shape_str(first) + " and " + shape_str(s));
    lens.push_back(s[axis]);
    total += s[axis];
  }
  Shape out_shape = first;
  out_shape[axis] = total;
  auto v = axis_view(out_shape, axis, "concat");
  std::vector<double> out(numel_of(out_shape));
  std::size_t offset = 0;
  for (std::size_t q = 0; q < parts.size(); ++q) {
    auto src = parts[q].data();
    const std::size_t block = lens[q] * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o) {
      std::copy_n(src.data() + o * block, block, out.data() + (o * v.len + offset) * v.inner);
    }
    offset += lens[q];
  }
  std::vector<const Tensor*> ins;
  for (const auto& p : parts) ins.push_back(&p);
  return finish_many(Primitive::Concat, Tensor(out_shape, std::move(out)), ins,
                     [v, lens](std::span<const double> g, std::span<const std::span<double>> gin) {
                       std::size_t offset = 0;
                       for (std::size_t q = 0; q < lens.size(); ++q) {
                         const std::size_t block = lens[q] * v.inner;
                         if (!gin[q].empty()) {
                           for (std::size_t o = 0; o < v.outer; ++o) {
                             const double* src = g.data() + (o * v.len + offset) * v.inner;
                             double* dst = gin[q].data() + o * block;
                             for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                           }
                         }
                         offset += lens[q];
                       }
                     });
}

Tensor slice(const Tensor& t, std::size_t axis, std::size_t begin, std::size_t end) {
  auto v = axis_view(t.shape(), axis, "slice");
  if (begin >= end || end > v.len) {
    shape_fail("slice", "range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for " +
                            shape_str(t.shape()));
  }
  Shape out_shape = t.shape();
  out_shape[axis] = end - begin;
  const std::size_t block = (end - begin) * v.inner;
  std::vector<double> out(numel_of(out_shape));
  auto src = t.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(src.data() + (o * v.len + begin) * v.inner, block, out.data() + o * block);
  }
  return finish(Primitive::Slice, Tensor(out_shape, std::move(out)), {&t},
                [v, begin, block](std::span<const double> g, std::span<const std::span<double>> gin) {
                  if (gin[0].empty()) return;
                  for (std::size_t o = 0; o < v.outer; ++o) {
                    double* dst = gin[0].data() + (o * v.len + begin) * v.inner;
                    const double* src = g.data() + o * block;
                    for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                  }
                });
}

std::vector<Tensor> split(const Tensor& t, std::size_t axis, std::span<const std::size_t> sizes) {
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  if (axis >= t.rank() || total != t.dim(axis)) {
    shape_fail("split", "sizes do not cover axis of " + shape_str(t.shape()));
  }
  std::vector<Tensor> out;
  std::size_t begin = 0;
  for (auto s : sizes) {
    out.push_back(slice(t, axis, begin, begin + s));
    begin += s;
  }
  return out;
}

Tensor sum(const Tensor& t) { return reduce_all(Primitive::Sum, t, 1.0); }
Tensor mean(const Tensor& t) { return reduce_all(Primitive::Mean, t, 1.0 / static_cast<double>(t.numel())); }
Tensor sum(const Tensor& t, std::size_t axis) { return reduce_axis(Primitive::Sum, t, axis, 1.0); }
Tensor mean(const Tensor& t, std::size_t axis) {
  auto v = axis_view(t.shape(), axis, "mean");
  return reduce_axis(Primitive::Mean, t, axis, 1.0 / static_cast<double>(v.len));
}

Tensor softmax(const Tensor& t, std::size_t axis) {
  auto v = axis_view(t.shape(), axis, "softmax");
  std::vector<double> out(t.numel());
  auto x = t.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.len * v.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < v.len; ++l) mx = std::max(mx, x[base + l * v.inner]);
      double z = 0.0;
      for (std::size_t l = 0; l < v.len; ++l) {
        double e = std::exp(x[base + l * v.inner] - mx);
        out[base + l * v.inner] = e;
        z += e;
      }
      for (std::size_t l = 0; l < v.len; ++l) out[base + l * v.inner] /= z;
    }
  }
  Tensor value(t.shape(), std::move(out));
  auto sy = value.storage();
  return finish(Primitive::Softmax, value, {&t},
                [sy, v](std::span<const double> g, std::span<const std::span<double>> gin) {
                  if (gin[0].empty()) return;
                  const auto& y = *sy;
                  for (std::size_t o = 0; o < v.outer; ++o) {
                    for (std::size_t i = 0; i < v.inner; ++i) {
                      const std::size_t base = o * v.len * v.inner + i;
                      double dot = 0.0;
                      for (std::size_t l = 0; l < v.len; ++l) dot += g[base + l * v.inner] * y[base + l * v.inner];
                      for (std::size_t l = 0; l < v.len; ++l) {
                        const std::size_t k = base + l * v.inner;
                        gin[0][k] += y[k] * (g[k] - dot);
                      }
                    }
                  }
                });
}

Tensor tanh(const Tensor& t) {
  return unary(
      Primitive::Tanh, t, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& t) {
  return unary(
      Primitive::Relu, t, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& t) {
  return unary(
      Primitive::Softplus, t, [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor sigmoid(const Tensor& t) {
  return unary(
      Primitive::Sigmoid, t,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& t) {
  return unary(
      Primitive::Exp, t, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& t) {
  for (double x : t.data()) {
    if (!(x > 0.0)) throw DomainError("log: non-positive input " + std::to_string(x));
  }
  return unary(
      Primitive::Log, t, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor scale(const Tensor& t, double factor) {
  return unary(
      Primitive::Scale, t, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& t, double offset) {
  return unary(
      Primitive::AddScalar, t, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor gather(const Tensor& t, std::span<const std::size_t> indices) {
  if (indices.empty()) shape_fail("gather", "empty index list");
  std::vector<double> out(indices.size());
  auto src = t.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= src.size()) {
      throw std::out_of_range("gather: index " + std::to_string(indices[i]) + " out of range for " +
                              shape_str(t.shape()));
    }
    out[i] = src[indices[i]];
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return finish(Primitive::Gather, Tensor({indices.size()}, std::move(out)), {&t},
                [idx = std::move(idx)](std::span<const double> g, std::span<const std::span<double>> gin) {
                  if (gin[0].empty()) return;
                  for (std::size_t i = 0; i < idx.size(); ++i) gin[0][idx[i]] += g[i];
                });
}

Tensor reshape(const Tensor& t, Shape shape) {
  if (numel_of(shape) != t.numel()) {
    shape_fail("reshape", "cannot reshape " + shape_str(t.shape()) + " to " + shape_str(shape));
  }
  Tensor value(std::move(shape), std::vector<double>(t.data().begin(), t.data().end()));
  return finish(Primitive::Reshape, value, {&t}, [](std::span<const double> g, std::span<const std::span<double>> gin) {
    if (gin[0].empty()) return;
    for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
  });
}

Tensor transpose(const Tensor& t) {
  if (t.rank() != 2) shape_fail("transpose", "expects a matrix, got " + shape_str(t.shape()));
  const std::size_t m = t.dim(0);
  const std::size_t n = t.dim(1);
  std::vector<double> out(m * n);
  auto src = t.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = src[i * n + j];
  }
  return finish(Primitive::Transpose, Tensor({n, m}, std::move(out)), {&t},
                [m, n](std::span<const double> g, std::span<const std::span<double>> gin) {
                  if (gin[0].empty()) return;
                  for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) gin[0][i * n + j] += g[j * m + i];
                  }
                });
}

}  // namespace isp::ad
