#include "isp/train/experiment.hpp"

#include <stdexcept>

#include "isp/data/synthetic.hpp"

namespace isp::train {
namespace {

std::size_t steps_for(const PredictConfig& pc, const data::Corpus& corpus, int image, int observer) {
  if (pc.steps > 0) return pc.steps;
  for (const auto& sp : corpus.scanpaths) {
    if (sp.image_id == image && sp.observer_id == observer) return sp.fixations.size();
  }
  return corpus.config.scanpath_length;
}

template <class ParamsFor>
std::vector<data::Scanpath> predict_with(const model::ModelConfig& cfg, const data::Corpus& corpus, data::Split split,
                                         const PredictConfig& pc, ParamsFor params_for) {
  std::vector<data::Scanpath> out;
  for (const auto* scene : corpus.scenes_in(split)) {
    for (std::size_t o = 0; o < cfg.n_observers; ++o) {
      const auto seed = data::derive_seed(pc.seed, static_cast<std::uint64_t>(scene->id), o);
      out.push_back(model::sample_scanpath(cfg, params_for(o), scene->features, o, scene->id, pc.mode, seed,
                                           steps_for(pc, corpus, scene->id, static_cast<int>(o))));
    }
  }
  return out;
}

}  // namespace

std::vector<data::Scanpath> predict_split(const model::ModelConfig& cfg, const model::ParamSet& params,
                                          const data::Corpus& corpus, data::Split split, const PredictConfig& pc) {
  return predict_with(cfg, corpus, split, pc, [&](std::size_t) -> const model::ParamSet& { return params; });
}

std::vector<data::Scanpath> predict_split_per_observer(const model::ModelConfig& cfg,
                                                       const std::vector<model::ParamSet>& params,
                                                       const data::Corpus& corpus, data::Split split,
                                                       const PredictConfig& pc) {
  if (params.size() != cfg.n_observers) {
    throw std::invalid_argument("expected one parameter set per observer, got " + std::to_string(params.size()));
  }
  return predict_with(cfg, corpus, split, pc, [&](std::size_t o) -> const model::ParamSet& { return params[o]; });
}

std::vector<Variant> ablation_variants(const model::ModelConfig& base) {
  auto make = [&](std::string name, bool oe, bool fi, bool fp, model::ObserverMode mode) {
    model::ModelConfig c = base;
    c.enable_oe = oe;
    c.enable_fi = fi;
    c.enable_fp = fp;
    c.observer_mode = mode;
    c.validate();
    return Variant{std::move(name), c};
  };
  using model::ObserverMode;
  return {make("none", false, false, false, ObserverMode::Embedding),
          make("OE", true, false, false, ObserverMode::Embedding),
          make("OE+FI", true, true, false, ObserverMode::Embedding),
          make("OE+FP", true, false, true, ObserverMode::Embedding),
          make("OE+FI+FP", true, true, true, ObserverMode::Embedding),
          make("one-hot", false, false, false, ObserverMode::OneHotConcat)};
}

VariantRun train_variant(const Variant& variant, const data::Corpus& corpus, const TrainConfig& tc,
                         std::uint64_t init_seed) {
  auto result = train(variant.config, model::init_params(variant.config, init_seed), corpus, tc);
  return {std::move(result.params), std::move(result.curve)};
}

VariantResult evaluate_variant(const Variant& variant, VariantRun run, const data::Corpus& corpus,
                               data::Split split, const PredictConfig& pc, const metrics::MetricConfig& mc) {
  VariantResult r;
  r.variant = variant;
  r.params = std::move(run.params);
  r.curve = std::move(run.curve);
  r.predictions = predict_split(variant.config, r.params, corpus, split, pc);
  const auto gts = corpus.scanpaths_in(split);
  r.value = eval::value_eval(r.predictions, gts, mc).summary;
  r.ranking = eval::rank_eval(r.predictions, gts, mc);
  return r;
}

std::vector<VariantResult> run_ablation_suite(const model::ModelConfig& base, const data::Corpus& corpus,
                                              const TrainConfig& tc, std::uint64_t init_seed,
                                              const PredictConfig& pc, const metrics::MetricConfig& mc,
                                              data::Split split) {
  std::vector<VariantResult> out;
  for (const auto& v : ablation_variants(base)) {
    out.push_back(evaluate_variant(v, train_variant(v, corpus, tc, init_seed), corpus, split, pc, mc));
  }
  return out;
}

}  // namespace isp::train
