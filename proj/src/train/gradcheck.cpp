#include "isp/train/gradcheck.hpp"

#include <random>

#include "isp/train/train.hpp"

namespace isp::train {

model::ModelConfig gradcheck_model_config() {
  model::ModelConfig c;
  c.n_observers = 4;
  c.grid_h = 4;
  c.grid_w = 4;
  c.channels = 3;
  c.observer_dim = 3;
  c.hidden = 4;
  c.semantic_channels = 2;
  c.max_steps = 3;
  return c;
}

ad::GradCheckReport check_loss_gradients(std::uint64_t seed, const ad::GradCheckOptions& opts) {
  const auto cfg = gradcheck_model_config();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  auto params = model::init_params(cfg, seed);
  // Move away from the symmetric initialization so no gradient is trivially zero.
  for (auto& [_, t] : params) {
    for (auto& v : t.mutable_data()) v += 0.2 * n(rng);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> e(cfg.channels * cfg.cells());
  for (auto& v : e) v = u(rng);
  const ad::Tensor features({cfg.channels, cfg.cells()}, e);
  const data::Scanpath gt{0, static_cast<int>(seed % cfg.n_observers),
                          {{u(rng), u(rng), 180.0}, {u(rng), u(rng), 320.0}, {u(rng), u(rng), 90.0}}};

  std::vector<std::string> names;
  std::vector<ad::Tensor> values;
  for (const auto& [name, t] : params) {
    names.push_back(name);
    values.push_back(t);
  }
  const auto f = [&](ad::Tape&, const std::vector<ad::Tensor>& traced) {
    model::ParamSet p;
    for (std::size_t i = 0; i < names.size(); ++i) p.emplace(names[i], traced[i]);
    return scanpath_loss(cfg, p, features, gt, 0.5).total;
  };
  return ad::grad_check(f, values, names, opts);
}

}  // namespace isp::train
