#include "isp/autodiff/primitive_checks.hpp"

#include <cmath>
#include <random>

#include "isp/autodiff/ops.hpp"

namespace isp::ad {
namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> d(numel_of(shape));
  for (auto& x : d) x = u(rng);
  return Tensor(std::move(shape), std::move(d));
}

}  // namespace

std::vector<PrimitiveCase> primitive_cases() {
  auto weights = [](std::size_t m, std::size_t n) {
    std::vector<double> w(m * n);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
    return Tensor({m, n}, std::move(w));
  };
  // Contract every output against a fixed non-uniform weight so each entry of
  // the gradient is exercised.
  auto probe = [weights](const Tensor& y) {
    Tensor flat = reshape(y, {y.numel()});
    return sum(mul(flat, reshape(weights(1, y.numel()), {y.numel()})));
  };
  std::vector<PrimitiveCase> cases;
  cases.push_back({"matmul",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng), random_tensor({n, m + 1}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(matmul(p[0], p[1])); }});
  cases.push_back({"matvec",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng), random_tensor({n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(matmul(p[0], p[1])); }});
  cases.push_back({"add_broadcast",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng), random_tensor({n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(add(p[0], p[1])); }});
  cases.push_back({"sub_broadcast",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, 1}, rng), random_tensor({m, n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(sub(p[0], p[1])); }});
  cases.push_back({"mul_broadcast",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({2, m, n}, rng), random_tensor({m, n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(mul(p[0], p[1])); }});
  cases.push_back({"div",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng), random_tensor({m, n}, rng, 0.5, 2.0)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(div(p[0], p[1])); }});
  cases.push_back({"outer",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m}, rng), random_tensor({n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(outer(p[0], p[1])); }});
  cases.push_back({"concat",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng), random_tensor({m, n + 1}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(concat(p, 1)); }});
  cases.push_back({"slice",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n + 2}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(slice(p[0], 1, 1, p[0].dim(1) - 1)); }});
  cases.push_back({"mean_axis",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n, 2}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(mean(p[0], 1)); }});
  cases.push_back({"sum_axis",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(sum(p[0], 0)); }});
  cases.push_back({"mean_all",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng)}; },
                   [](Tape&, const std::vector<Tensor>& p) { return mean(mul(p[0], p[0])); }});
  cases.push_back({"softmax",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng, -2, 2)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(softmax(p[0], 1)); }});
  cases.push_back({"softmax_axis0",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng, -2, 2)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(softmax(p[0], 0)); }});
  cases.push_back({"tanh",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng, -2, 2)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(tanh(p[0])); }});
  cases.push_back({"relu",
                   // keep away from the kink
                   [](auto& rng, auto m, auto n) {
                     Tensor t = random_tensor({m, n}, rng, 0.1, 1.0);
                     auto d = t.mutable_data();
                     for (std::size_t i = 0; i < d.size(); i += 2) d[i] = -d[i];
                     return std::vector{t};
                   },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(relu(p[0])); }});
  cases.push_back({"softplus",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng, -3, 3)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(softplus(p[0])); }});
  cases.push_back({"sigmoid",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng, -3, 3)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(sigmoid(p[0])); }});
  cases.push_back({"exp",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(exp(p[0])); }});
  cases.push_back({"log",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng, 0.5, 3.0)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(log(p[0])); }});
  cases.push_back({"scale",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(scale(p[0], -1.7)); }});
  cases.push_back({"add_scalar",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng)}; },
                   [](Tape&, const std::vector<Tensor>& p) { return sum(mul(add_scalar(p[0], 0.3), p[0])); }});
  cases.push_back({"gather",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) {
                     std::vector<std::size_t> idx{0, p[0].numel() - 1, 0, 1};
                     return probe(gather(p[0], idx));
                   }});
  cases.push_back({"reshape",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(reshape(p[0], {p[0].dim(1), p[0].dim(0)})); }});
  cases.push_back({"transpose",
                   [](auto& rng, auto m, auto n) { return std::vector{random_tensor({m, n}, rng)}; },
                   [probe](Tape&, const std::vector<Tensor>& p) { return probe(transpose(p[0])); }});
  return cases;
}

std::vector<PrimitiveCheck> check_primitives(std::size_t seeds, const GradCheckOptions& opts) {
  std::vector<PrimitiveCheck> out;
  for (const auto& c : primitive_cases()) {
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
      std::mt19937_64 rng(seed * 977 + 3);
      const std::size_t m = 1 + seed % 3;
      const std::size_t n = 2 + (seed * 5) % 4;
      auto inputs = c.inputs(rng, m, n);
      std::vector<std::string> names(inputs.size(), c.name);
      out.push_back({c.name, seed, grad_check(c.f, inputs, names, opts)});
    }
  }
  return out;
}

}  // namespace isp::ad
