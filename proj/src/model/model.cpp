#include "isp/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "isp/autodiff/ops.hpp"

namespace isp::model {
namespace {

using ad::Shape;
using ad::Tensor;

constexpr double kVarFloor = 1e-4;
constexpr double kMinDurationMs = 50.0;
constexpr double kMaxDurationMs = 5000.0;

const Tensor& param(const ParamSet& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::invalid_argument("missing model parameter '" + name + "'");
  return it->second;
}

std::map<std::string, Shape> param_shapes(const ModelConfig& cfg) {
  const std::size_t n = cfg.n_observers;
  const std::size_t hw = cfg.cells();
  const std::size_t c = cfg.channels;
  const std::size_t d = cfg.observer_dim;
  const std::size_t h = cfg.hidden;
  const std::size_t l = cfg.maps();
  const bool one_hot = cfg.observer_mode == ObserverMode::OneHotConcat;

  std::map<std::string, Shape> s;
  s["m0_logits"] = {hw};
  s["W_x"] = {4 * h, one_hot ? h + n : h};
  s["W_h"] = {4 * h, h};
  s["b_lstm"] = {4 * h};
  s["W_a"] = {l * hw, h};
  s["b_a"] = {l * hw};
  s["W_r"] = {h, l};
  s["W_ae"] = {l, c};
  s["w_mu"] = {h};
  s["b_mu"] = {1};
  s["w_var"] = {h};
  s["b_var"] = {1};
  if (cfg.enable_oe) {
    s["W_u"] = {d, n};
    s["W_ud"] = {4 * h, d};
  }
  if (cfg.enable_fi) {
    s["W_eu"] = {d, c};
    s["W_mu"] = {d, d};
    s["w_eu"] = {d};
    s["W_hs"] = {hw, hw};
    s["b_hs"] = {hw};
    s["W_us"] = {hw, d};
    s["W_hc"] = {h, 2 * c};
    s["b_hc"] = {h};
    s["W_uc"] = {h, d};
  } else {
    s["W_xr"] = {c, h};
  }
  if (cfg.enable_fp) {
    s["W_b"] = {d, c};
    s["W_um"] = {d, d};
    s["w_b"] = {d};
  }
  return s;
}

Tensor flat_features(const ModelConfig& cfg, const Tensor& features) {
  const Shape flat{cfg.channels, cfg.cells()};
  if (features.shape() == flat) return features;
  if (features.shape() == Shape{cfg.channels, cfg.grid_h, cfg.grid_w}) return ad::reshape(features, flat);
  throw ad::ShapeError("scene features " + ad::shape_str(features.shape()) + " do not match model " +
                       ad::shape_str({cfg.channels, cfg.grid_h, cfg.grid_w}));
}

// Row `index` of a (rows, cols) tensor as a length-cols vector.
Tensor row(const Tensor& t, std::size_t index) { return ad::reshape(ad::slice(t, 0, index, index + 1), {t.dim(1)}); }

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::string_view observer_mode_name(ObserverMode mode) {
  return mode == ObserverMode::Embedding ? "embedding" : "one_hot_concat";
}

ObserverMode observer_mode_from_name(std::string_view name) {
  if (name == "embedding") return ObserverMode::Embedding;
  if (name == "one_hot_concat") return ObserverMode::OneHotConcat;
  throw std::invalid_argument("unknown observer_mode '" + std::string(name) + "'");
}

std::string_view decode_mode_name(DecodeMode mode) { return mode == DecodeMode::Argmax ? "argmax" : "sample"; }

DecodeMode decode_mode_from_name(std::string_view name) {
  if (name == "argmax") return DecodeMode::Argmax;
  if (name == "sample") return DecodeMode::Sample;
  throw std::invalid_argument("unknown decode mode '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  for (auto [name, v] : {std::pair{"n_observers", n_observers}, {"grid_h", grid_h}, {"grid_w", grid_w},
                         {"channels", channels}, {"observer_dim", observer_dim}, {"hidden", hidden},
                         {"semantic_channels", semantic_channels}, {"max_steps", max_steps}}) {
    if (v < 1) throw std::invalid_argument(std::string("model config: ") + name + " must be >= 1");
  }
  if ((enable_fi || enable_fp) && !enable_oe) throw std::invalid_argument("model config: FI and FP require OE");
  if (observer_mode == ObserverMode::OneHotConcat && (enable_oe || enable_fi || enable_fp)) {
    throw std::invalid_argument("model config: one_hot_concat requires OE, FI and FP disabled");
  }
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"n_observers", cfg.n_observers},
          {"grid_h", cfg.grid_h},
          {"grid_w", cfg.grid_w},
          {"channels", cfg.channels},
          {"observer_dim", cfg.observer_dim},
          {"hidden", cfg.hidden},
          {"semantic_channels", cfg.semantic_channels},
          {"max_steps", cfg.max_steps},
          {"enable_oe", cfg.enable_oe},
          {"enable_fi", cfg.enable_fi},
          {"enable_fp", cfg.enable_fp},
          {"observer_mode", observer_mode_name(cfg.observer_mode)}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("model config must be a JSON object");
  static const std::set<std::string> known{"n_observers", "grid_h",    "grid_w",    "channels",
                                           "observer_dim", "hidden",   "semantic_channels", "max_steps",
                                           "enable_oe",   "enable_fi", "enable_fp", "observer_mode"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("model config: unknown key '" + key + "'");
  }
  ModelConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_observers", cfg.n_observers);
  get("grid_h", cfg.grid_h);
  get("grid_w", cfg.grid_w);
  get("channels", cfg.channels);
  get("observer_dim", cfg.observer_dim);
  get("hidden", cfg.hidden);
  get("semantic_channels", cfg.semantic_channels);
  get("max_steps", cfg.max_steps);
  get("enable_oe", cfg.enable_oe);
  get("enable_fi", cfg.enable_fi);
  get("enable_fp", cfg.enable_fp);
  if (j.contains("observer_mode")) cfg.observer_mode = observer_mode_from_name(j.at("observer_mode").get<std::string>());
  cfg.validate();
  return cfg;
}

std::vector<std::string> param_names(const ModelConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& [name, _] : param_shapes(cfg)) names.push_back(name);
  return names;
}

ParamSet init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamSet params;
  // Iterates in name order so the draw sequence is fixed by the config alone.
  for (const auto& [name, shape] : param_shapes(cfg)) {
    Tensor t = Tensor::zeros(shape);
    auto data = t.mutable_data();
    const double fan_in = shape.size() == 2 ? static_cast<double>(shape[1]) : static_cast<double>(shape[0]);
    double sd = 1.0 / std::sqrt(fan_in);
    if (name == "W_u") sd = 0.1;
    if (name == "W_a" || name == "W_hs" || name == "W_us") sd = 0.01;
    if (name.rfind("b_", 0) == 0 || name == "m0_logits") sd = 0.0;
    for (auto& v : data) v = sd * normal(rng);
    if (name == "W_hs") {
      for (std::size_t i = 0; i < shape[0]; ++i) data[i * shape[1] + i] += 1.0;
    }
    if (name == "b_lstm") {
      const std::size_t h = cfg.hidden;
      for (std::size_t i = h; i < 2 * h; ++i) data[i] = 1.0;  // forget gate
    }
    if (name == "b_mu") data[0] = std::log(250.0);
    if (name == "b_var") data[0] = std::log(std::expm1(0.25));
    params.emplace(name, std::move(t));
  }
  return params;
}

void check_params(const ModelConfig& cfg, const ParamSet& params) {
  const auto shapes = param_shapes(cfg);
  for (const auto& [name, shape] : shapes) {
    const auto& t = param(params, name);
    if (t.shape() != shape) {
      throw std::invalid_argument("parameter '" + name + "' has shape " + ad::shape_str(t.shape()) + ", expected " +
                                  ad::shape_str(shape));
    }
  }
  for (const auto& [name, _] : params) {
    if (!shapes.count(name)) throw std::invalid_argument("unexpected parameter '" + name + "' for this config");
  }
}

Tensor one_hot(std::size_t index, std::size_t n) {
  if (index >= n) throw std::out_of_range("index " + std::to_string(index) + " out of range for one-hot of " + std::to_string(n));
  Tensor t = Tensor::zeros({n});
  t.mutable_data()[index] = 1.0;
  return t;
}

Tensor encode_observer(const ModelConfig& cfg, const ParamSet& params, std::size_t observer) {
  if (observer >= cfg.n_observers) {
    throw std::out_of_range("observer " + std::to_string(observer) + " out of range (" +
                            std::to_string(cfg.n_observers) + " observers)");
  }
  if (!cfg.enable_oe) return Tensor::zeros({cfg.observer_dim});
  return ad::matmul(param(params, "W_u"), one_hot(observer, cfg.n_observers));
}

Tensor observer_guidance(const ParamSet& params, const Tensor& features, const Tensor& u) {
  const auto& w_eu = param(params, "W_eu");
  if (features.rank() != 2) throw ad::ShapeError("observer_guidance expects C x HW features");
  const std::size_t d = w_eu.dim(0);
  auto bias = ad::reshape(ad::matmul(param(params, "W_mu"), u), {d, 1});
  auto hidden = ad::tanh(ad::add(ad::matmul(w_eu, features), bias));
  return ad::softmax(ad::matmul(param(params, "w_eu"), hidden), 0);
}

Tensor fixated_features(const Tensor& features, const Tensor& m) {
  if (features.rank() != 2 || m.shape() != Shape{features.dim(1)}) {
    throw ad::ShapeError("fixated_features: features " + ad::shape_str(features.shape()) + " vs map " +
                         ad::shape_str(m.shape()));
  }
  return ad::mul(features, m);
}

IntegrationState integrate_features(const ModelConfig& cfg, const ParamSet& params, const Tensor& x_t,
                                    const Tensor& x_u, const Tensor& u) {
  IntegrationState s;
  if (!cfg.enable_fi) {
    s.r = ad::matmul(ad::transpose(x_t), param(params, "W_xr"));
    return s;
  }
  if (x_t.shape() != x_u.shape()) {
    throw ad::ShapeError("integrate_features: X_t " + ad::shape_str(x_t.shape()) + " vs X_u " +
                         ad::shape_str(x_u.shape()));
  }
  const Tensor parts[] = {x_t, x_u};
  s.x_ut = ad::concat(parts, 0);
  auto spatial = ad::mean(s.x_ut, 0);
  auto channel = ad::mean(s.x_ut, 1);
  s.u_s = ad::add(ad::relu(ad::add(ad::matmul(param(params, "W_hs"), spatial), param(params, "b_hs"))),
                  ad::matmul(param(params, "W_us"), u));
  s.u_c = ad::add(ad::relu(ad::add(ad::matmul(param(params, "W_hc"), channel), param(params, "b_hc"))),
                  ad::matmul(param(params, "W_uc"), u));
  s.r = ad::outer(s.u_s, s.u_c);
  return s;
}

DecoderState initial_state(const ModelConfig& cfg) {
  return {Tensor::zeros({cfg.hidden}), Tensor::zeros({cfg.hidden}), 0};
}

ObserverContext make_context(const ModelConfig& cfg, const ParamSet& params, const Tensor& features,
                             std::size_t observer) {
  ObserverContext ctx;
  ctx.observer = observer;
  ctx.features = flat_features(cfg, features);
  ctx.u = encode_observer(cfg, params, observer);
  ctx.identifier = one_hot(observer, cfg.n_observers);
  if (cfg.enable_fi) {
    ctx.m_u = observer_guidance(params, ctx.features, ctx.u);
    ctx.x_u = fixated_features(ctx.features, ctx.m_u);
  }
  ctx.readout = ad::matmul(param(params, "W_ae"), ctx.features);
  if (cfg.enable_oe) ctx.u_gates = ad::matmul(param(params, "W_ud"), ctx.u);
  return ctx;
}

std::pair<DecoderState, Tensor> decoder_step(const ModelConfig& cfg, const ParamSet& params, const Tensor& r,
                                             const DecoderState& state, const ObserverContext& ctx) {
  if (state.t >= cfg.max_steps) {
    throw std::out_of_range("decoder step " + std::to_string(state.t + 1) + " exceeds max_steps " +
                            std::to_string(cfg.max_steps));
  }
  const std::size_t h = cfg.hidden;
  const std::size_t hw = cfg.cells();
  const std::size_t l = cfg.maps();
  if (r.shape() != Shape{hw, h}) throw ad::ShapeError("decoder_step: R_t has shape " + ad::shape_str(r.shape()));

  Tensor x = ad::mean(r, 0);
  if (cfg.observer_mode == ObserverMode::OneHotConcat) {
    const Tensor parts[] = {x, ctx.identifier};
    x = ad::concat(parts, 0);
  }
  auto gates = ad::add(ad::add(ad::matmul(param(params, "W_x"), x), ad::matmul(param(params, "W_h"), state.hidden)),
                       param(params, "b_lstm"));
  if (cfg.enable_oe) gates = ad::add(gates, ctx.u_gates);
  const std::size_t sizes[] = {h, h, h, h};
  auto g = ad::split(gates, 0, sizes);
  auto input = ad::sigmoid(g[0]);
  auto forget = ad::sigmoid(g[1]);
  auto candidate = ad::tanh(g[2]);
  auto output = ad::sigmoid(g[3]);

  DecoderState next;
  next.cell = ad::add(ad::mul(forget, state.cell), ad::mul(input, candidate));
  next.hidden = ad::mul(output, ad::tanh(next.cell));
  next.t = state.t + 1;

  auto from_hidden =
      ad::reshape(ad::add(ad::matmul(param(params, "W_a"), next.hidden), param(params, "b_a")), {l, hw});
  auto from_r = ad::transpose(ad::matmul(r, param(params, "W_r")));
  auto a = ad::add(ad::add(from_hidden, from_r), ctx.readout);
  return {std::move(next), std::move(a)};
}

Prioritization prioritize_fixation(const ModelConfig& cfg, const ParamSet& params, const Tensor& features,
                                   const Tensor& a, const Tensor& u) {
  const std::size_t hw = cfg.cells();
  const std::size_t l = cfg.maps();
  if (a.shape() != Shape{l, hw}) {
    throw ad::ShapeError("prioritize_fixation: A_t " + ad::shape_str(a.shape()) + ", expected " +
                         ad::shape_str({l, hw}));
  }
  Prioritization p;
  if (!cfg.enable_fp) {
    p.beta = Tensor::vector({1.0});
    p.m = ad::softmax(row(a, 0), 0);
    return p;
  }
  // V[l][c] = mean_p E[c][p] A[l][p].
  p.v = ad::scale(ad::matmul(a, ad::transpose(features)), 1.0 / static_cast<double>(hw));
  auto bias = ad::matmul(param(params, "W_um"), u);
  auto hidden = ad::tanh(ad::add(ad::matmul(p.v, ad::transpose(param(params, "W_b"))), bias));
  p.beta = ad::softmax(ad::matmul(hidden, param(params, "w_b")), 0);
  p.m = ad::softmax(ad::matmul(p.beta, a), 0);
  return p;
}

std::pair<Tensor, Tensor> duration_head(const ParamSet& params, const DecoderState& state) {
  auto mu = ad::add(ad::sum(ad::mul(param(params, "w_mu"), state.hidden)), ad::reshape(param(params, "b_mu"), {}));
  auto raw = ad::add(ad::sum(ad::mul(param(params, "w_var"), state.hidden)), ad::reshape(param(params, "b_var"), {}));
  return {mu, ad::add_scalar(ad::softplus(raw), kVarFloor)};
}

Tensor initial_map(const ParamSet& params) { return ad::softmax(param(params, "m0_logits"), 0); }

StepOutput model_step(const ModelConfig& cfg, const ParamSet& params, const ObserverContext& ctx,
                      const Tensor& m_prev, DecoderState& state) {
  StepOutput out;
  auto x_t = fixated_features(ctx.features, m_prev);
  out.integration = integrate_features(cfg, params, x_t, ctx.x_u, ctx.u);
  auto [next, a] = decoder_step(cfg, params, out.integration.r, state, ctx);
  state = std::move(next);
  out.a = a;
  auto prio = prioritize_fixation(cfg, params, ctx.features, a, ctx.u);
  out.m = prio.m;
  out.beta = prio.beta;
  out.v = prio.v;
  std::tie(out.mu, out.var) = duration_head(params, state);
  return out;
}

Rollout rollout_teacher_forced(const ModelConfig& cfg, const ParamSet& params, const Tensor& features,
                               std::size_t observer, const data::Scanpath& gt) {
  data::validate(gt);
  if (gt.fixations.size() > cfg.max_steps) {
    throw std::invalid_argument("ground-truth scanpath has " + std::to_string(gt.fixations.size()) +
                                " fixations, more than max_steps " + std::to_string(cfg.max_steps));
  }
  Rollout ro;
  ro.context = make_context(cfg, params, features, observer);
  ro.m0 = initial_map(params);
  auto state = initial_state(cfg);
  Tensor m_prev = ro.m0;
  for (std::size_t t = 0; t < gt.fixations.size(); ++t) {
    ro.steps.push_back(model_step(cfg, params, ro.context, m_prev, state));
    const auto& f = gt.fixations[t];
    m_prev = one_hot(data::cell_index(f.x, f.y, cfg.grid_h, cfg.grid_w), cfg.cells());
  }
  return ro;
}

data::Scanpath sample_scanpath(const ModelConfig& cfg, const ParamSet& params, const Tensor& features,
                               std::size_t observer, int image_id, DecodeMode mode, std::uint64_t seed,
                               std::size_t steps) {
  if (steps < 1) throw std::invalid_argument("sample_scanpath needs at least one step");
  std::mt19937_64 rng(seed);
  auto ctx = make_context(cfg, params, features, observer);
  auto state = initial_state(cfg);
  Tensor m_prev = initial_map(params);

  data::Scanpath sp;
  sp.image_id = image_id;
  sp.observer_id = static_cast<int>(observer);
  for (std::size_t t = 0; t < steps; ++t) {
    auto out = model_step(cfg, params, ctx, m_prev, state);
    const auto probs = out.m.data();
    std::size_t cell = 0;
    double log_dur = out.mu.item();
    if (mode == DecodeMode::Argmax) {
      cell = argmax(probs);
    } else {
      cell = std::discrete_distribution<std::size_t>(probs.begin(), probs.end())(rng);
      log_dur += std::sqrt(out.var.item()) * std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    const double dur = std::clamp(std::exp(log_dur), kMinDurationMs, kMaxDurationMs);
    sp.fixations.push_back(data::cell_center(cell, cfg.grid_h, cfg.grid_w, dur));
    m_prev = one_hot(cell, cfg.cells());
  }
  return sp;
}

std::vector<double> observer_feature(const ModelConfig& cfg, const ParamSet& params, std::size_t observer) {
  if (!cfg.enable_oe || !(cfg.enable_fi || cfg.enable_fp)) {
    throw std::invalid_argument("observer features need OE with FI or FP enabled");
  }
  const auto u = encode_observer(cfg, params, observer);
  std::vector<double> v;
  auto append = [&](const char* name) {
    const auto p = ad::matmul(param(params, name), u);
    v.insert(v.end(), p.data().begin(), p.data().end());
  };
  if (cfg.enable_fi) {
    append("W_mu");
    append("W_us");
    append("W_uc");
  }
  if (cfg.enable_fp) append("W_um");
  return v;
}

}  // namespace isp::model
