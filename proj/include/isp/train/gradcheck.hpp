#pragma once

#include <cstdint>

#include "isp/autodiff/grad_check.hpp"
#include "isp/model/model.hpp"

namespace isp::train {

// Full model on a 4x4 grid with C=3, L=2, 4 observers.
model::ModelConfig gradcheck_model_config();

// Teacher-forced total loss of a random 3-fixation scanpath under perturbed
// seeded parameters, checked for every parameter tensor.
ad::GradCheckReport check_loss_gradients(std::uint64_t seed, const ad::GradCheckOptions& opts = {});

}  // namespace isp::train
