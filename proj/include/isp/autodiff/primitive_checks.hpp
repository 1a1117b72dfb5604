#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "isp/autodiff/grad_check.hpp"

namespace isp::ad {

// A differentiable primitive wrapped as a scalar function of random inputs of
// roughly m x n extent.
struct PrimitiveCase {
  std::string name;
  std::function<std::vector<Tensor>(std::mt19937_64&, std::size_t, std::size_t)> inputs;
  ScalarFn f;
};

std::vector<PrimitiveCase> primitive_cases();

struct PrimitiveCheck {
  std::string name;
  std::uint64_t seed = 0;
  GradCheckReport report;
};

// Every primitive case on `seeds` random shapes.
std::vector<PrimitiveCheck> check_primitives(std::size_t seeds = 10, const GradCheckOptions& opts = {});

}  // namespace isp::ad
