#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "isp/data/scanpath.hpp"
#include "isp/metrics/scanpath_metrics.hpp"

namespace isp::eval {

struct PairMetrics {
  int image_id = 0;
  int observer_id = 0;
  double sm = 0.0;
  metrics::MultiMatchResult mm;
  int sed = 0;
};

struct Stat {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean, 0 for n < 2
};
Stat summarize(std::span<const double> values);

struct ValueSummary {
  std::size_t n = 0;
  Stat sm;
  Stat mm;  // mean of the available MultiMatch dimensions
  Stat sed;
  Stat mm_shape;
  Stat mm_direction;
  Stat mm_length;
  Stat mm_position;
  Stat mm_duration;
};

struct ValueResult {
  std::vector<PairMetrics> pairs;
  ValueSummary summary;
};

ValueSummary summarize_pairs(std::span<const PairMetrics> pairs);

// Scores each ground truth against the prediction for the same (image,
// observer). Throws std::invalid_argument naming the first missing pair.
ValueResult value_eval(std::span<const data::Scanpath> preds, std::span<const data::Scanpath> gts,
                       const metrics::MetricConfig& cfg, std::size_t threads = 1);

inline constexpr std::size_t kDefaultKs[] = {1, 5};

struct RankEntry {
  int image_id = 0;
  int observer_id = 0;
  std::size_t rank = 0;
};

struct RankingResult {
  std::vector<RankEntry> entries;
  double mrr = 0.0;
  std::map<std::size_t, double> recall_at;  // K -> percent
  std::size_t n_observers = 0;
  std::vector<int> skipped_images;  // images lacking some observer's gt or prediction
};

// For each prediction, the observers' ground truths on its image are sorted by
// ScanMatch descending, ties by observer id ascending; the rank of the
// predicted observer's own ground truth is recorded.
RankingResult rank_eval(std::span<const data::Scanpath> preds, std::span<const data::Scanpath> gts,
                        const metrics::MetricConfig& cfg, std::span<const std::size_t> ks = kDefaultKs,
                        std::size_t threads = 1);

// Expected MRR when the correct item's rank is uniform over 1..n.
double random_rank_mrr(std::size_t n);

// Leave-one-observer-out agreement between ground truths on the same image.
ValueSummary human_consistency(std::span<const data::Scanpath> gts, const metrics::MetricConfig& cfg);

struct SaliencyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // row-major
  bool density = true;

  double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

double default_saliency_sigma(std::size_t width);

// Fixation counts binned at height x width, smoothed with a separable Gaussian
// truncated at 3 sigma (sigma in map cells) and normalized to sum 1.
SaliencyMap build_saliency(std::span<const data::Fixation> fixations, double sigma, std::size_t height,
                           std::size_t width);

struct SaliencyScores {
  double cc = 0.0;
  double auc = 0.0;
  double nss = 0.0;
  double sauc = 0.0;
  double kld = 0.0;
  double sim = 0.0;
  bool nss_degenerate = false;
};

double correlation_coefficient(const SaliencyMap& a, const SaliencyMap& b);
// Area under the ROC curve of map values at fixated cells (positives) against
// all other cells, over every distinct threshold; ties count one half.
double auc_judd(const SaliencyMap& pred, std::span<const data::Fixation> fixations);
// Negatives are the map values at the shuffle fixations.
double auc_shuffled(const SaliencyMap& pred, std::span<const data::Fixation> fixations,
                    std::span<const data::Fixation> shuffle);
// Returns 0 and sets `degenerate` for a constant map.
double nss(const SaliencyMap& pred, std::span<const data::Fixation> fixations, bool* degenerate = nullptr);
double kl_divergence(const SaliencyMap& pred, const SaliencyMap& gt);
double similarity(const SaliencyMap& pred, const SaliencyMap& gt);

SaliencyScores saliency_metrics(const SaliencyMap& pred, std::span<const data::Fixation> gt_fixations,
                                const SaliencyMap& gt_map, std::span<const data::Fixation> other_fixations);

struct SaliencyEvalConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  double sigma = 0.0;  // 0 selects default_saliency_sigma(width)
  std::size_t shuffle_images = 10;
  std::uint64_t seed = 0;
};

struct SaliencyResult {
  std::map<int, SaliencyScores> per_image;
  SaliencyScores mean;
  std::map<int, SaliencyMap> pred_maps;
};

// Pools predicted fixations from all observers per image and scores them
// against the pooled ground truth of that image. sAUC negatives come from
// `shuffle_images` other images chosen with `seed`.
SaliencyResult evaluate_saliency(std::span<const data::Scanpath> preds, std::span<const data::Scanpath> gts,
                                 const SaliencyEvalConfig& cfg);

// 8-bit binary PGM, max-normalized.
void write_pgm(const SaliencyMap& map, const std::filesystem::path& path);

}  // namespace isp::eval
