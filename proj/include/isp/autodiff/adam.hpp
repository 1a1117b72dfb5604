#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "isp/autodiff/tensor.hpp"

namespace isp::ad {

using NamedTensors = std::map<std::string, Tensor>;

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-5;
};

struct AdamState {
  AdamOptions options;
  std::size_t step = 0;
  NamedTensors m;
  NamedTensors v;
};

// Bias-corrected Adam with decoupled weight decay (AdamW). Parameters without
// an entry in `grads` are left untouched, moments included.
void adam_step(AdamState& state, NamedTensors& params, const NamedTensors& grads);

}  // namespace isp::ad
