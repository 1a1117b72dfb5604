#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "isp/autodiff/adam.hpp"
#include "isp/autodiff/tensor.hpp"
#include "isp/data/scanpath.hpp"

// Observer-conditioned scanpath model. Spatial maps are flat row-major vectors
// of length H*W; feature stacks are C x H*W.
namespace isp::model {

enum class ObserverMode { Embedding, OneHotConcat };
std::string_view observer_mode_name(ObserverMode mode);
ObserverMode observer_mode_from_name(std::string_view name);

struct ModelConfig {
  std::size_t n_observers = 8;
  std::size_t grid_h = 16;
  std::size_t grid_w = 16;
  std::size_t channels = 12;
  std::size_t observer_dim = 16;
  std::size_t hidden = 64;
  std::size_t semantic_channels = 4;
  std::size_t max_steps = 8;
  bool enable_oe = true;
  bool enable_fi = true;
  bool enable_fp = true;
  // OneHotConcat feeds the raw identifier to the decoder and requires all
  // three toggles off.
  ObserverMode observer_mode = ObserverMode::Embedding;

  void validate() const;
  std::size_t cells() const { return grid_h * grid_w; }
  // Number of semantic maps the decoder emits: L with prioritization, else 1.
  std::size_t maps() const { return enable_fp ? semantic_channels : 1; }
};

nlohmann::json to_json(const ModelConfig& cfg);
// Rejects unknown keys.
ModelConfig model_config_from_json(const nlohmann::json& j);

using ParamSet = ad::NamedTensors;

// Names of the parameters `cfg` uses, sorted.
std::vector<std::string> param_names(const ModelConfig& cfg);
ParamSet init_params(const ModelConfig& cfg, std::uint64_t seed);
// Throws std::invalid_argument on a missing, extra or misshapen parameter.
void check_params(const ModelConfig& cfg, const ParamSet& params);

// Observer embedding u = W_u e_observer, or zeros with OE disabled.
ad::Tensor encode_observer(const ModelConfig& cfg, const ParamSet& params, std::size_t observer);
ad::Tensor one_hot(std::size_t index, std::size_t n);

// Guidance map over a C x HW feature stack: softmax_p(w_eu . tanh(W_eu E(p) + W_mu u)).
ad::Tensor observer_guidance(const ParamSet& params, const ad::Tensor& features, const ad::Tensor& u);

// E o m with m broadcast over channels.
ad::Tensor fixated_features(const ad::Tensor& features, const ad::Tensor& m);

struct IntegrationState {
  ad::Tensor x_ut;  // 2C x HW
  ad::Tensor u_s;   // HW
  ad::Tensor u_c;   // h
  ad::Tensor r;     // HW x h
};

// With FI enabled: X_ut = [X_t; X_u],
//   u_s = relu(W_hs mean_c(X_ut) + b_hs) + W_us u,
//   u_c = relu(W_hc mean_p(X_ut) + b_hc) + W_uc u,  R = u_s (x) u_c.
// With FI disabled r = X_t^T W_xr and the other fields stay empty.
IntegrationState integrate_features(const ModelConfig& cfg, const ParamSet& params, const ad::Tensor& x_t,
                                    const ad::Tensor& x_u, const ad::Tensor& u);

struct DecoderState {
  ad::Tensor hidden;
  ad::Tensor cell;
  std::size_t t = 0;
};
DecoderState initial_state(const ModelConfig& cfg);

// Per-rollout quantities that do not change across steps.
struct ObserverContext {
  std::size_t observer = 0;
  ad::Tensor features;    // C x HW
  ad::Tensor u;           // d
  ad::Tensor identifier;  // one-hot over observers
  ad::Tensor m_u;         // HW, FI only
  ad::Tensor x_u;         // C x HW, FI only
  ad::Tensor readout;     // maps x HW, W_ae E
  ad::Tensor u_gates;     // 4h, W_ud u; OE only
};
// `features` is C x H x W or C x HW.
ObserverContext make_context(const ModelConfig& cfg, const ParamSet& params, const ad::Tensor& features,
                             std::size_t observer);

// One LSTM step over mean-over-rows(R_t), then the semantic maps
//   A_t[l] = (W_a h + b_a)[l] + (R_t W_r)[:, l] + W_ae[l] . E(p).
// Returns the new state and A_t (maps x HW). Throws std::out_of_range past max_steps.
std::pair<DecoderState, ad::Tensor> decoder_step(const ModelConfig& cfg, const ParamSet& params,
                                                 const ad::Tensor& r, const DecoderState& state,
                                                 const ObserverContext& ctx);

struct Prioritization {
  ad::Tensor m;     // HW
  ad::Tensor beta;  // maps
  ad::Tensor v;     // maps x C, FP only
};
// V[l] = mean_p(E o A[l]), beta = softmax_l(w_b . tanh(W_b V[l] + W_um u)),
// m = softmax_p(sum_l beta[l] A[l]). With FP disabled m = softmax(A[0]), beta = [1].
Prioritization prioritize_fixation(const ModelConfig& cfg, const ParamSet& params, const ad::Tensor& features,
                                   const ad::Tensor& a, const ad::Tensor& u);

// Gaussian over log-duration: mu = w_mu . h + b_mu, var = softplus(w_var . h + b_var) + 1e-4.
std::pair<ad::Tensor, ad::Tensor> duration_head(const ParamSet& params, const DecoderState& state);

// Learned first-step prior softmax(m0_logits).
ad::Tensor initial_map(const ParamSet& params);

struct StepOutput {
  ad::Tensor m;
  ad::Tensor beta;
  ad::Tensor mu;
  ad::Tensor var;
  ad::Tensor a;
  ad::Tensor v;
  IntegrationState integration;
};

struct Rollout {
  ad::Tensor m0;
  ObserverContext context;
  std::vector<StepOutput> steps;
};

// Runs one model step from the previous map; shared by training and inference.
StepOutput model_step(const ModelConfig& cfg, const ParamSet& params, const ObserverContext& ctx,
                      const ad::Tensor& m_prev, DecoderState& state);

// Step t is conditioned on the one-hot map of ground-truth fixation t-1 (m0 at t = 0).
Rollout rollout_teacher_forced(const ModelConfig& cfg, const ParamSet& params, const ad::Tensor& features,
                               std::size_t observer, const data::Scanpath& gt);

enum class DecodeMode { Argmax, Sample };
std::string_view decode_mode_name(DecodeMode mode);
DecodeMode decode_mode_from_name(std::string_view name);

// Free-running decode. The chosen cell is fed back as a one-hot map, matching
// the teacher-forced training input.
data::Scanpath sample_scanpath(const ModelConfig& cfg, const ParamSet& params, const ad::Tensor& features,
                               std::size_t observer, int image_id, DecodeMode mode, std::uint64_t seed,
                               std::size_t steps);

// Observer descriptor [W_mu u, W_us u, W_uc u, W_um u] over the enabled paths.
// Throws std::invalid_argument without OE or with both FI and FP off.
std::vector<double> observer_feature(const ModelConfig& cfg, const ParamSet& params, std::size_t observer);

}  // namespace isp::model
