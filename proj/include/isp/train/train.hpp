#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "isp/autodiff/tensor.hpp"
#include "isp/data/corpus.hpp"
#include "isp/model/model.hpp"

namespace isp::train {

struct TrainConfig {
  std::size_t epochs = 15;
  double lr = 1e-4;
  double weight_decay = 5e-5;
  // Maximum number of distinct observers per same-image batch.
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  double ft_lr = 1e-5;
  std::size_t ft_epochs = 2;
  double duration_loss_weight = 0.1;

  // Epoch counts may be zero; everything else must be positive.
  void validate() const;
};

// Mean over steps of -log(m_t[cell(gt_t)] + 1e-12).
ad::Tensor position_loss(std::span<const ad::Tensor> maps, const data::Scanpath& gt, std::size_t grid_h,
                         std::size_t grid_w);

// Mean Gaussian NLL of log(dur) under N(mu_t, var_t).
ad::Tensor duration_loss(std::span<const ad::Tensor> mu, std::span<const ad::Tensor> var, const data::Scanpath& gt);

struct LossParts {
  ad::Tensor position;
  ad::Tensor duration;
  ad::Tensor total;  // position + lambda * duration
};
LossParts scanpath_loss(const model::ModelConfig& cfg, const model::ParamSet& params, const ad::Tensor& features,
                        const data::Scanpath& gt, double duration_weight);

// Scanpaths of k distinct observers on one image.
struct Batch {
  int image_id = 0;
  std::vector<const data::Scanpath*> items;
};

// Groups scanpaths by image, chunks each group into batches of at most
// `batch_size` distinct observers and shuffles the batch order.
std::vector<Batch> make_batches(std::span<const data::Scanpath> scanpaths, std::size_t batch_size,
                                std::uint64_t seed);

struct EpochLoss {
  std::size_t epoch = 0;  // 0 is the evaluation before any update
  double position = 0.0;
  double duration = 0.0;
  double total = 0.0;
};

struct TrainResult {
  model::ParamSet params;
  std::vector<EpochLoss> curve;
};

// Mean losses of `params` over `scanpaths` without updating anything.
EpochLoss evaluate_loss(const model::ModelConfig& cfg, const model::ParamSet& params, const data::Corpus& corpus,
                        std::span<const data::Scanpath> scanpaths, double duration_weight);

// Observes every batch before its update; used to assert the batch rule.
using BatchObserver = std::function<void(std::size_t epoch, const Batch&)>;

// Teacher-forced training on the corpus train split with Adam. Throws
// std::runtime_error naming the batch when the loss becomes non-finite.
TrainResult train(const model::ModelConfig& cfg, model::ParamSet init, const data::Corpus& corpus,
                  const TrainConfig& tc, const BatchObserver& on_batch = {});

// Same loop over an explicit scanpath list with explicit optimizer settings.
TrainResult train_on(const model::ModelConfig& cfg, model::ParamSet init, const data::Corpus& corpus,
                     std::span<const data::Scanpath> scanpaths, std::size_t epochs, double lr,
                     const TrainConfig& tc, const BatchObserver& on_batch = {});

// One copy of `base` per observer, each trained on that observer's train
// scanpaths for ft_epochs at ft_lr. `cfg` must be observer-agnostic.
std::vector<model::ParamSet> fine_tune_per_observer(const model::ModelConfig& cfg, const model::ParamSet& base,
                                                    const data::Corpus& corpus, const TrainConfig& tc);

void write_loss_curve_csv(const std::vector<EpochLoss>& curve, const std::filesystem::path& path);

}  // namespace isp::train
