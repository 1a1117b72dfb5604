#include "isp/autodiff/adam.hpp"

#include <cmath>

namespace isp::ad {

void adam_step(AdamState& state, NamedTensors& params, const NamedTensors& grads) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("adam_step: gradient for unknown parameter " + name);
    if (it->second.shape() != g.shape()) {
      throw ShapeError("adam_step: gradient shape " + shape_str(g.shape()) + " does not match parameter " + name +
                       " " + shape_str(it->second.shape()));
    }
  }

  const auto& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);

  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    auto [mit, m_new] = state.m.try_emplace(name, Tensor::zeros(p.shape()));
    auto [vit, v_new] = state.v.try_emplace(name, Tensor::zeros(p.shape()));
    auto pd = p.mutable_data();
    auto md = mit->second.mutable_data();
    auto vd = vit->second.mutable_data();
    auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = o.beta1 * md[i] + (1.0 - o.beta1) * gd[i];
      vd[i] = o.beta2 * vd[i] + (1.0 - o.beta2) * gd[i] * gd[i];
      const double m_hat = md[i] / bc1;
      const double v_hat = vd[i] / bc2;
      pd[i] -= o.lr * (m_hat / (std::sqrt(v_hat) + o.eps) + o.weight_decay * pd[i]);
    }
  }
}

}  // namespace isp::ad
