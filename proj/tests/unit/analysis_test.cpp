#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "isp/analysis/analysis.hpp"
#include "isp/data/corpus.hpp"

using namespace isp;
using namespace isp::analysis;
using data::Roi;

namespace {

// A 2x2 scene: top-left social, top-right nonsocial, bottom row background.
data::SyntheticScene quad_scene(int id) {
  data::SyntheticScene s;
  s.id = id;
  s.features = ad::Tensor::zeros({1, 2, 2});
  s.roi_mask = {Roi::Social, Roi::Nonsocial, Roi::Background, Roi::Background};
  return s;
}

constexpr data::Fixation kSocial{0.25, 0.25, 100.0};
constexpr data::Fixation kNonsocial{0.75, 0.25, 100.0};
constexpr data::Fixation kBackground{0.25, 0.75, 100.0};

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(RoiStats, HandTally) {
  const std::vector<data::SyntheticScene> scenes{quad_scene(0), quad_scene(1)};
  const std::vector<data::Scanpath> sps{
      {0, 3, {{0.25, 0.75, 200.0}, {0.25, 0.25, 300.0}, {0.3, 0.2, 100.0}}},
      {1, 3, {{0.75, 0.25, 50.0}, {0.6, 0.9, 150.0}}},
      {0, 1, {kSocial, kSocial}},
  };
  const auto stats = roi_stats(sps, scenes);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].observer_id, 1);
  EXPECT_DOUBLE_EQ(stats[0][Roi::Social].proportion, 1.0);
  EXPECT_DOUBLE_EQ(*stats[0][Roi::Social].latency_ms, 0.0);
  EXPECT_FALSE(stats[0][Roi::Nonsocial].latency_ms.has_value());
  EXPECT_FALSE(stats[0][Roi::Background].mean_duration_ms.has_value());

  const auto& o = stats[1];
  EXPECT_EQ(o.n_fixations, 5u);
  EXPECT_DOUBLE_EQ(o[Roi::Social].proportion, 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(o[Roi::Nonsocial].proportion, 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(o[Roi::Background].proportion, 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(*o[Roi::Social].latency_ms, 200.0);       // only scanpath 0
  EXPECT_DOUBLE_EQ(*o[Roi::Nonsocial].latency_ms, 0.0);      // only scanpath 1
  EXPECT_DOUBLE_EQ(*o[Roi::Background].latency_ms, 25.0);    // (0 + 50) / 2
  EXPECT_DOUBLE_EQ(*o[Roi::Social].mean_duration_ms, 200.0);
  EXPECT_DOUBLE_EQ(*o[Roi::Background].mean_duration_ms, 175.0);
}

TEST(RoiStats, ProportionsSumToOneAndUnknownImageThrows) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<data::SyntheticScene> scenes{quad_scene(0)};
  std::vector<data::Scanpath> sps;
  for (int o = 0; o < 6; ++o) {
    data::Scanpath sp{0, o, {}};
    for (int i = 0; i < 7; ++i) sp.fixations.push_back({u(rng), u(rng), 100.0});
    sps.push_back(sp);
  }
  for (const auto& s : roi_stats(sps, scenes)) {
    double total = 0.0;
    for (const auto& c : s.category) total += c.proportion;
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
  const std::vector<data::Scanpath> bad{{9, 0, {kSocial}}};
  EXPECT_THROW(roi_stats(bad, scenes), std::invalid_argument);
  EXPECT_EQ(proportions(roi_stats(sps, scenes), Roi::Social).size(), 6u);
}

TEST(RoiStats, GeneratorGroupGapIsRecovered) {
  data::GeneratorConfig g;
  const auto corpus = data::build_corpus(g, 2024);
  const auto stats = roi_stats(corpus.scanpaths, corpus.scenes);
  std::vector<double> a, b;
  for (const auto& s : stats) {
    (corpus.profiles[static_cast<std::size_t>(s.observer_id)].group == data::Group::A ? a : b)
        .push_back(s[Roi::Social].proportion);
  }
  EXPECT_LT(std::accumulate(a.begin(), a.end(), 0.0) / a.size(), std::accumulate(b.begin(), b.end(), 0.0) / b.size());
}

TEST(Ranks, TiesShareMeanRank) {
  const double v[] = {10.0, 20.0, 10.0, 5.0, 20.0};
  EXPECT_EQ(mean_ranks(v), (std::vector<double>{2.5, 4.5, 2.5, 1.0, 4.5}));
}

TEST(Spearman, IdenticalAndReversedOrder) {
  const double x[] = {1.0, 2.0, 3.0};
  const double rev[] = {3.0, 2.0, 1.0};
  EXPECT_DOUBLE_EQ(spearman_rho(x, x).rho, 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(x, rev).rho, -1.0);
}

TEST(Spearman, DegenerateAndInvalidInput) {
  const double x[] = {1.0, 2.0, 3.0, 4.0};
  const double flat[] = {5.0, 5.0, 5.0, 5.0};
  const auto r = spearman_rho(x, flat);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.rho, 0.0);
  EXPECT_THROW(spearman_rho(std::span(x, 2), std::span(x, 2)), std::invalid_argument);
  EXPECT_THROW(spearman_rho(x, std::span(x, 3)), std::invalid_argument);
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(8), y(8);
    for (auto& v : x) v = n(rng);
    for (std::size_t i = 0; i < 8; ++i) y[i] = x[i] + n(rng);
    std::vector<double> fx, fy;
    for (double v : x) fx.push_back(std::exp(3.0 * v));
    for (double v : y) fy.push_back(std::atan(v) - 7.0);
    const auto a = spearman_rho(x, y, 200, 5), b = spearman_rho(fx, fy, 200, 5);
    EXPECT_EQ(a.rho, b.rho);
    EXPECT_EQ(a.p_two_sided, b.p_two_sided);
  }
}

TEST(Spearman, PermutationPMatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(5), y(5);
    for (auto& v : x) v = n(rng);
    for (std::size_t i = 0; i < 5; ++i) y[i] = 0.7 * x[i] + n(rng);
    const auto rx = mean_ranks(x);
    auto ry = mean_ranks(y);
    const double rho = pearson(rx, ry);
    std::sort(ry.begin(), ry.end());
    int two = 0, greater = 0, total = 0;
    do {
      const double r = pearson(rx, ry);
      two += std::abs(r) >= std::abs(rho) - 1e-12;
      greater += r >= rho - 1e-12;
      ++total;
    } while (std::next_permutation(ry.begin(), ry.end()));
    ASSERT_EQ(total, 120);
    const auto res = spearman_rho(x, y, 10000, static_cast<std::uint64_t>(trial));
    EXPECT_NEAR(res.rho, rho, 1e-12);
    EXPECT_NEAR(res.p_two_sided, two / 120.0, 0.02);
    EXPECT_NEAR(res.p_greater, greater / 120.0, 0.02);
  }
}

TEST(Semantics, GroundTruthAgainstItselfIsPerfectlyRanked) {
  const std::vector<data::SyntheticScene> scenes{quad_scene(0)};
  std::vector<data::Scanpath> sps;
  for (int o = 0; o < 6; ++o) {
    data::Scanpath sp{0, o, {}};
    for (int i = 0; i < 6; ++i) sp.fixations.push_back(i <= o ? kSocial : kBackground);
    sps.push_back(sp);
  }
  const auto cmp = compare_semantics(sps, sps, scenes, 999, 1);
  EXPECT_DOUBLE_EQ(cmp.social_rank.rho, 1.0);
  EXPECT_NEAR(cmp.social_rank.p_greater, 1.0 / 720.0, 0.01);
  EXPECT_EQ(cmp.predicted.size(), 6u);

  auto missing = sps;
  missing.pop_back();
  EXPECT_THROW(compare_semantics(missing, sps, scenes, 99, 1), std::invalid_argument);
}

TEST(Semantics, SplitByGroup) {
  const std::vector<double> v{1, 2, 3, 4};
  const std::vector<int> labels{1, 0, 0, 1};
  const auto [a, b] = split_by_group(v, labels);
  EXPECT_EQ(a, (std::vector<double>{2, 3}));
  EXPECT_EQ(b, (std::vector<double>{1, 4}));
  const std::vector<int> bad{0, 2, 0, 1};
  EXPECT_THROW(split_by_group(v, bad), std::invalid_argument);
}

TEST(GroupCompare, NullAndSeparatedGroups) {
  const double a[] = {1.0, 2.0, 3.0, 4.0};
  const auto same = group_compare(a, a, 2000, 1);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_GT(same.p, 0.95);
  const double lo[] = {0.0, 1e-3, -1e-3};
  const double hi[] = {10.0, 10.0 + 1e-3, 10.0 - 2e-3};
  const auto sep = group_compare(lo, hi, 10000, 1);
  EXPECT_LT(sep.t, -1000.0);
  // Only the observed split and its mirror reach |t|: 2 of 20.
  EXPECT_NEAR(sep.p, 0.1, 0.02);
  const double two_lo[] = {0.0, 1e-3}, two_hi[] = {10.0, 10.0 + 2e-3};
  EXPECT_NEAR(group_compare(two_lo, two_hi, 10000, 1).p, 2.0 / 6.0, 0.02);
  EXPECT_THROW(group_compare(std::span(a, 1), a), std::invalid_argument);
}

TEST(GroupCompare, WelchByHand) {
  const double a[] = {1.0, 2.0, 3.0};     // mean 2, var 1
  const double b[] = {2.0, 4.0, 6.0, 8.0};  // mean 5, var 20/3
  EXPECT_NEAR(welch_t(a, b), -3.0 / std::sqrt(1.0 / 3.0 + 20.0 / 12.0), 1e-14);
  const double c[] = {1.0, 1.0}, d[] = {2.0, 2.0};
  EXPECT_TRUE(std::isinf(welch_t(c, d)));
  EXPECT_EQ(welch_t(c, c), 0.0);
}

TEST(GroupCompare, MatchesExhaustiveSplitsFourVsFour) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> pooled(8);
    for (std::size_t i = 0; i < 8; ++i) pooled[i] = n(rng) + (i < 4 ? 0.0 : 0.8 * trial / 5.0);
    const std::span<const double> all(pooled);
    const double observed = std::abs(welch_t(all.first(4), all.subspan(4)));
    int hits = 0, total = 0;
    for (unsigned mask = 0; mask < 256; ++mask) {
      if (__builtin_popcount(mask) != 4) continue;
      std::vector<double> a, b;
      for (std::size_t i = 0; i < 8; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
      hits += std::abs(welch_t(a, b)) >= observed - 1e-12;
      ++total;
    }
    ASSERT_EQ(total, 70);
    EXPECT_NEAR(group_compare(all.first(4), all.subspan(4), 10000, 7).p, hits / 70.0, 0.02) << trial;
  }
}

TEST(ObserverFeatures, ManualProjections) {
  model::ModelConfig cfg;
  cfg.n_observers = 2;
  cfg.grid_h = 1;
  cfg.grid_w = 2;
  cfg.channels = 1;
  cfg.observer_dim = 2;
  cfg.hidden = 2;
  cfg.semantic_channels = 2;
  auto params = model::init_params(cfg, 0);
  params.at("W_u") = ad::Tensor({2, 2}, {1.0, 0.0, 2.0, 1.0});  // u_0 = (1, 2), u_1 = (0, 1)
  params.at("W_mu") = ad::Tensor({2, 2}, {1.0, 1.0, 0.0, 2.0});
  params.at("W_us") = ad::Tensor({2, 2}, {0.5, 0.0, 0.0, -1.0});
  params.at("W_uc") = ad::Tensor({2, 2}, {3.0, 0.0, 1.0, 1.0});
  params.at("W_um") = ad::Tensor({2, 2}, {0.0, 1.0, 1.0, 0.0});
  const auto f = extract_observer_features(cfg, params);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0], (std::vector<double>{3.0, 4.0, 0.5, -2.0, 3.0, 3.0, 2.0, 1.0}));
  EXPECT_EQ(f[1], (std::vector<double>{1.0, 2.0, 0.0, -1.0, 0.0, 1.0, 1.0, 0.0}));

  params.at("W_u") = ad::Tensor({2, 2}, {1.0, 1.0, 2.0, 2.0});
  const auto same = extract_observer_features(cfg, params);
  EXPECT_EQ(same[0], same[1]);

  auto off = cfg;
  off.enable_oe = off.enable_fi = off.enable_fp = false;
  EXPECT_THROW(extract_observer_features(off, model::init_params(off, 0)), std::invalid_argument);
}

TEST(Classifier, SeparableFeaturesAreClassifiedPerfectly) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<std::vector<double>> f;
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    const int label = i % 2;
    f.push_back({(label ? 2.0 : -2.0) + n(rng), n(rng), n(rng)});
    labels.push_back(label);
  }
  const auto r = classify_group_loocv(f, labels);
  EXPECT_DOUBLE_EQ(r.accuracy, 100.0);
  EXPECT_EQ(r.predictions, labels);
  const auto again = classify_group_loocv(f, labels);
  EXPECT_EQ(r.probabilities, again.probabilities);
}

TEST(Classifier, RandomLabelsStayNearChance) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  double total = 0.0;
  const int runs = 30;
  ClassifierConfig cfg;
  cfg.epochs = 100;
  for (int run = 0; run < runs; ++run) {
    std::vector<std::vector<double>> f(8, std::vector<double>(4));
    for (auto& row : f) {
      for (auto& v : row) v = n(rng);
    }
    std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1};
    std::shuffle(labels.begin(), labels.end(), rng);
    cfg.seed = static_cast<std::uint64_t>(run);
    total += classify_group_loocv(f, labels, cfg).accuracy;
  }
  // Mean of 30 runs of 8 folds: binomial sd of the mean ~ 50 / sqrt(240).
  EXPECT_NEAR(total / runs, 50.0, 4.0 * 50.0 / std::sqrt(240.0));
}

TEST(Classifier, RejectsInvalidInput) {
  const std::vector<std::vector<double>> f(4, std::vector<double>{1.0});
  EXPECT_THROW(classify_group_loocv(f, std::vector<int>{1, 1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(classify_group_loocv(std::span(f).first(3), std::vector<int>{0, 1, 0}), std::invalid_argument);
  EXPECT_THROW(classify_group_loocv(f, std::vector<int>{0, 1, 2, 0}), std::invalid_argument);
}

TEST(Binomial, IntervalForEightTrials) {
  const auto [lo, hi] = binomial_interval(8);
  EXPECT_DOUBLE_EQ(lo, 12.5);
  EXPECT_DOUBLE_EQ(hi, 87.5);
}
