#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isp/data/corpus.hpp"
#include "isp/eval/evaluation.hpp"
#include "isp/model/model.hpp"
#include "isp/train/train.hpp"

namespace isp::train {

struct PredictConfig {
  model::DecodeMode mode = model::DecodeMode::Argmax;
  std::uint64_t seed = 0;
  // Fixations per predicted scanpath; 0 matches the ground-truth length.
  std::size_t steps = 0;
};

// One prediction per (scene in `split`, observer), ordered by image then observer.
std::vector<data::Scanpath> predict_split(const model::ModelConfig& cfg, const model::ParamSet& params,
                                          const data::Corpus& corpus, data::Split split, const PredictConfig& pc);

// As predict_split with a separate parameter set per observer (fine-tuned baseline).
std::vector<data::Scanpath> predict_split_per_observer(const model::ModelConfig& cfg,
                                                       const std::vector<model::ParamSet>& params,
                                                       const data::Corpus& corpus, data::Split split,
                                                       const PredictConfig& pc);

struct Variant {
  std::string name;
  model::ModelConfig config;
};

// none, OE, OE+FI, OE+FP, OE+FI+FP and the one-hot baseline, sharing `base` extents.
std::vector<Variant> ablation_variants(const model::ModelConfig& base);

struct VariantResult {
  Variant variant;
  model::ParamSet params;
  std::vector<EpochLoss> curve;
  std::vector<data::Scanpath> predictions;
  eval::ValueSummary value;
  eval::RankingResult ranking;
};

struct VariantRun {
  model::ParamSet params;
  std::vector<EpochLoss> curve;
};

// Trains one variant from seeded initialization.
VariantRun train_variant(const Variant& variant, const data::Corpus& corpus, const TrainConfig& tc,
                         std::uint64_t init_seed);

// Predicts and scores a trained variant on `split`.
VariantResult evaluate_variant(const Variant& variant, VariantRun run, const data::Corpus& corpus,
                               data::Split split, const PredictConfig& pc, const metrics::MetricConfig& mc);

// Trains and evaluates every variant under the same seeds.
std::vector<VariantResult> run_ablation_suite(const model::ModelConfig& base, const data::Corpus& corpus,
                                              const TrainConfig& tc, std::uint64_t init_seed,
                                              const PredictConfig& pc, const metrics::MetricConfig& mc,
                                              data::Split split = data::Split::Test);

}  // namespace isp::train
