#pragma once

#include <functional>
#include <string>
#include <vector>

#include "isp/autodiff/tape.hpp"
#include "isp/autodiff/tensor.hpp"

namespace isp::ad {

// A traced scalar function of the given parameters. The function receives
// traced copies of the parameters, in order, and must return a scalar recorded
// on the same tape.
using ScalarFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, abs_floor), so entries whose
  // gradient is below the floor are compared absolutely.
  double abs_floor = 1e-4;
};

// Compares reverse-mode gradients against central differences. NaN in either
// gradient is a failure.
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& params,
                           const std::vector<std::string>& names, const GradCheckOptions& opts = {});

}  // namespace isp::ad
