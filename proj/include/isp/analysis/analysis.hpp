#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "isp/data/scanpath.hpp"
#include "isp/data/synthetic.hpp"
#include "isp/model/model.hpp"

namespace isp::analysis {

inline constexpr std::size_t kDefaultPermutations = 10000;

struct CategoryStats {
  std::size_t count = 0;
  double proportion = 0.0;
  // Mean over scanpaths of the summed prior durations before the first
  // fixation in the category; empty when the category is never fixated.
  std::optional<double> latency_ms;
  std::optional<double> mean_duration_ms;
};

struct ObserverRoiStats {
  int observer_id = 0;
  std::size_t n_fixations = 0;
  std::array<CategoryStats, data::kRoiCount> category;  // indexed by data::Roi

  const CategoryStats& operator[](data::Roi roi) const { return category[static_cast<std::size_t>(roi)]; }
};

// Per-observer ROI statistics, sorted by observer id. Throws
// std::invalid_argument for an image id without a scene.
std::vector<ObserverRoiStats> roi_stats(std::span<const data::Scanpath> scanpaths,
                                        std::span<const data::SyntheticScene> scenes);

// Proportion of `roi` fixations per observer, aligned with `stats`.
std::vector<double> proportions(std::span<const ObserverRoiStats> stats, data::Roi roi);

// Mean ranks (1-based), ties sharing their average rank.
std::vector<double> mean_ranks(std::span<const double> values);

struct SpearmanResult {
  double rho = 0.0;
  double p_two_sided = 1.0;  // P(|rho_perm| >= |rho|)
  double p_greater = 1.0;    // P(rho_perm >= rho)
  bool degenerate = false;   // constant input; rho reported as 0
};

// Pearson correlation of mean ranks; p-values from seeded permutations of y,
// computed as (hits + 1) / (permutations + 1).
SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y,
                            std::size_t permutations = kDefaultPermutations, std::uint64_t seed = 0);

// Welch's t of mean(a) - mean(b); +-inf when both variances vanish and the
// means differ.
double welch_t(std::span<const double> a, std::span<const double> b);

struct GroupComparison {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t = 0.0;
  double p = 1.0;  // two-sided, from seeded label permutations of |t|
};

GroupComparison group_compare(std::span<const double> a, std::span<const double> b,
                              std::size_t permutations = kDefaultPermutations, std::uint64_t seed = 0);

struct SemanticComparison {
  std::vector<ObserverRoiStats> predicted;
  std::vector<ObserverRoiStats> ground_truth;
  // Per-observer social proportion, predicted against ground truth.
  SpearmanResult social_rank;
};

// Throws std::invalid_argument unless both sides cover the same observers.
SemanticComparison compare_semantics(std::span<const data::Scanpath> predicted,
                                     std::span<const data::Scanpath> ground_truth,
                                     std::span<const data::SyntheticScene> scenes,
                                     std::size_t permutations = kDefaultPermutations, std::uint64_t seed = 0);

// Splits per-observer values by group label (0 -> a, 1 -> b).
std::pair<std::vector<double>, std::vector<double>> split_by_group(std::span<const double> values,
                                                                   std::span<const int> labels);

// One feature vector per observer, in observer order.
std::vector<std::vector<double>> extract_observer_features(const model::ModelConfig& cfg,
                                                           const model::ParamSet& params);

struct ClassifierConfig {
  std::size_t hidden = 16;
  std::size_t epochs = 200;
  double lr = 1e-2;
  // Weights each class by n / (2 n_class) so the held-out class is not
  // penalized by the fold's majority.
  bool class_balanced = true;
  std::uint64_t seed = 0;
};

struct ClassifierResult {
  double accuracy = 0.0;  // percent
  std::vector<int> predictions;
  std::vector<double> probabilities;  // P(label = 1) per held-out observer
};

// Leave-one-out: a tanh MLP with logistic output trained with Adam on the
// z-scored (per fold) features of all other observers. Labels are 0/1.
ClassifierResult classify_group_loocv(std::span<const std::vector<double>> features, std::span<const int> labels,
                                      const ClassifierConfig& cfg = {});

// Central `level` interval of the Binomial(n, p) success fraction, as percent.
std::pair<double, double> binomial_interval(std::size_t n, double p = 0.5, double level = 0.95);

}  // namespace isp::analysis
