#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "isp/analysis/analysis.hpp"
#include "isp/data/synthetic.hpp"
#include "isp/eval/evaluation.hpp"
#include "isp/metrics/scanpath_metrics.hpp"
#include "isp/model/model.hpp"
#include "isp/train/experiment.hpp"
#include "isp/train/train.hpp"

namespace isp::io {

// Every source of randomness, in one place.
struct Seeds {
  std::uint64_t data = 0;
  std::uint64_t init = 0;
  std::uint64_t train = 0;
  std::uint64_t predict = 0;
  std::uint64_t saliency = 0;
  std::uint64_t analysis = 0;
  std::uint64_t classifier = 0;
};

struct Paths {
  std::string data_dir = "data";
  std::string checkpoint = "checkpoint.json";
  std::string out_dir = "out";
};

struct RunConfig {
  data::GeneratorConfig generator;
  model::ModelConfig model;
  train::TrainConfig train;
  metrics::MetricConfig metrics;
  train::PredictConfig predict;
  eval::SaliencyEvalConfig saliency;
  analysis::ClassifierConfig classifier;
  std::size_t permutations = analysis::kDefaultPermutations;
  Seeds seeds;
  Paths paths;

  // Copies `seeds` into the per-stage configs that carry their own seed.
  void sync_seeds();
  void validate() const;
};

nlohmann::json to_json(const data::GeneratorConfig& c);
data::GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const train::TrainConfig& c);
train::TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const metrics::MetricConfig& c);
metrics::MetricConfig metric_config_from_json(const nlohmann::json& j);

// Seeds live only in the "seeds" block; per-stage seed fields are not serialized.
nlohmann::json to_json(const RunConfig& c);
// Missing keys keep their defaults; unknown keys throw std::invalid_argument.
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace isp::io
